//! Decay rate `κ` of `E(X_n)` for several distances `ε` below criticality, and
//! the slope of `log κ` against `log ε`.
//!
//! Usage: `cargo run --release --example exponent_sweep -- [eps ...]`

use drlab::analytics::{
    default_kappa_window, exponent_fit, iterate_trace_until, kappa_fit, KAPPA_FLOOR,
};
use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};

fn main() -> drlab::Result<()> {
    let mut eps: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("eps"))
        .collect();
    if eps.is_empty() {
        eps = vec![0.04, 0.02, 0.01];
    }
    // Deep tails matter here: the mean is followed down to 1e-250.
    let policy = TruncationPolicy::weighted(1e-280);
    let mut points = Vec::new();
    for &e in &eps {
        let spec = ModelSpec::with_epsilon(2, StarLaw::constant(2)?, e)?;
        let trace = iterate_trace_until(&spec, &policy, 20_000, |r| r.mean < KAPPA_FLOOR)?;
        let window = default_kappa_window(&trace.means(), e)?;
        let fit = kappa_fit(&trace, window)?;
        println!(
            "eps = {e:<6} kappa_hat = {:.6} over generations {:?}",
            fit.slope, fit.window
        );
        points.push((e, fit.slope));
    }
    let fit = exponent_fit(&points)?;
    println!("slope of log kappa_hat vs log eps: {:.4}", fit.slope);
    Ok(())
}
