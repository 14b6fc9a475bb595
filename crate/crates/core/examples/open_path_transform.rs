//! The exact transform `E[θ^{N_n} 1{Y_n >= 1}]` against sampled critical
//! trees.

use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};
use drlab::open_paths::{transform_mc_check, McSettings};

fn main() -> drlab::Result<()> {
    let spec = ModelSpec::new(2, StarLaw::constant(2)?, 0.2)?;
    let mc = McSettings {
        count: 100_000,
        seed: 3,
        ..McSettings::default()
    };
    for n in [5, 10] {
        let checks = transform_mc_check(
            &spec,
            n,
            &[0.0, 0.5, 1.0],
            &mc,
            &TruncationPolicy::default(),
        )?;
        for c in checks {
            println!(
                "n = {n:>2} theta = {:.1}: exact {:.6e}, sampled {:.6e} +- {:.1e} ({:.2} s.e.)",
                c.theta, c.exact, c.estimate.mean, c.estimate.std_error, c.z
            );
        }
    }
    Ok(())
}
