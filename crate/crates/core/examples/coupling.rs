//! Subcritical survival against the open-path transform of the critical
//! system at `θ = p / p_c`, generation by generation.

use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};
use drlab::open_paths::coupling_check;

fn main() -> drlab::Result<()> {
    let policy = TruncationPolicy::weighted(1e-280);
    for p in [0.10, 0.15, 0.19] {
        let spec = ModelSpec::new(2, StarLaw::constant(2)?, p)?;
        let r = coupling_check(&spec, 200, &policy)?;
        println!(
            "p = {p}: theta = {}, holds = {}, min margin = {:.3e}",
            r.theta, r.holds, r.min_margin
        );
        for row in r.rows.iter().filter(|r| [0, 1, 10, 50, 200].contains(&r.n)) {
            println!(
                "  n = {:>3}: P(X_n >= 1) = {:.6e}  transform = {:.6e}",
                row.n, row.lhs, row.rhs
            );
        }
    }
    Ok(())
}
