//! Critical point, manifold residual and trace-level diagnostics.

mod checks;
mod fit;
mod trace;

pub use checks::{
    contraction_monitor, criticality_ceiling, delta_recursion_residual, first_contracting_index,
    manifest_departure, mean_lower_bound_check, moment_monitor, product_bound_check, CeilingReport,
    ContractionReport, DeltaRecursionReport, MeanLowerBoundReport, MomentMonitor,
    ProductBoundReport, ProductMode,
};
pub use fit::{
    default_kappa_window, exponent_fit, free_energy_estimate, kappa_fit, kappa_fit_series,
    linear_fit, loglog_slope, strictly_increasing, FitKind, FitResult, KAPPA_FLOOR,
};
pub use trace::{iterate_trace, iterate_trace_until, IterationTrace, TraceRecord};

use crate::dist::{h_prime, weighted_moment, IntPmf, StarLaw};

/// `p_c = 1 / (1 + E[((m-1) X* - 1) m^X*])`.
pub fn critical_p(star: &StarLaw, m: u32) -> f64 {
    let mf = f64::from(m);
    let e = star.expect(|x| ((mf - 1.0) * f64::from(x) - 1.0) * mf.powi(x as i32));
    1.0 / (1.0 + e)
}

/// Manifold residual `H(m) - m(m-1) H'(m)`.
pub fn delta(pmf: &IntPmf, m: u32) -> f64 {
    let mf = f64::from(m);
    weighted_moment(pmf, 0, mf) - mf * (mf - 1.0) * h_prime(pmf, mf)
}
