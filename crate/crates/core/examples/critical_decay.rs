//! The critical system: the generating function at `m` stays below
//! `m^{1/(m-1)}`, the running product grows like `n^2`, and the mean, the
//! survival probability and the probability of an open path decay like a
//! power of `n`.

use drlab::analytics::{criticality_ceiling, iterate_trace, loglog_slope, product_bound_check};
use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};
use drlab::open_paths::transform_trace;

fn main() -> drlab::Result<()> {
    let n_max = 1000;
    let spec = ModelSpec::new(2, StarLaw::constant(2)?, 0.2)?;
    let policy = TruncationPolicy::default();
    let trace = iterate_trace(&spec, n_max, &policy)?;

    let c = criticality_ceiling(&trace);
    println!(
        "sup H_n(2) = {:.12} at n = {} (ceiling {})",
        c.sup_h, c.argmax, c.ceiling
    );
    let p = product_bound_check(&trace, Some((200, n_max)))?;
    println!(
        "product / n^2 over [200, {n_max}]: spread {:.4}",
        p.ratio_spread().unwrap_or(f64::NAN)
    );

    let ns: Vec<f64> = (0..=n_max).map(|n| n as f64).collect();
    let surv: Vec<f64> = trace.records.iter().map(|r| r.survival).collect();
    let open: Vec<f64> = transform_trace(&spec, 0.0, n_max, &policy)?
        .iter()
        .map(|r| 1.0 - r.total)
        .collect();
    let w = (200, n_max);
    println!(
        "slope of E(Y_n):       {:.4}",
        loglog_slope(&ns, &trace.means(), w)?.slope
    );
    println!(
        "slope of P(Y_n >= 1):  {:.4}",
        loglog_slope(&ns, &surv, w)?.slope
    );
    println!(
        "slope of P(N_n >= 1):  {:.4}",
        loglog_slope(&ns, &open, w)?.slope
    );
    Ok(())
}
