//! Below criticality: the multiplicative recursion of the manifold residual,
//! the bound on its running product, and the elementary lower bound on the
//! mean for a star law with bounded support.

use drlab::analytics::{
    delta_recursion_residual, iterate_trace, mean_lower_bound_check, product_bound_check,
};
use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};

fn main() -> drlab::Result<()> {
    let policy = TruncationPolicy::default();

    let spec = ModelSpec::new(2, StarLaw::constant(2)?, 0.15)?;
    let trace = iterate_trace(&spec, 200, &policy)?;
    let r = delta_recursion_residual(&trace)?;
    println!(
        "p = 0.15: max |delta_(n+1) - delta_n H_n(2)| = {:.3e}, delta_n in (0, 1]: {}",
        r.max_abs_residual, r.delta_in_unit_interval
    );
    let b = product_bound_check(&trace, None)?;
    let top = b.products.iter().copied().fold(0.0, f64::max);
    println!(
        "largest running product {top:.6} <= 1/delta_0 = {:.6}",
        b.bound.unwrap_or(f64::NAN)
    );

    let spec = ModelSpec::new(2, StarLaw::uniform(1, 5)?, 0.1)?;
    let trace = iterate_trace(&spec, 4, &policy)?;
    let report = mean_lower_bound_check(&spec, &trace);
    for (n, mean, bound, _) in &report.rows {
        println!("n = {n}: E(X_n) = {mean:.6} >= {bound:.6}");
    }
    println!("lower bound holds: {}", report.holds);
    Ok(())
}
