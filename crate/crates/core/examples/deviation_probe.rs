//! Probability that the critical root value is large while few paths are
//! open, with its exponential ceiling, and the conditional law of the open
//! path count given survival.

use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};
use drlab::open_paths::{deviation_probe, McSettings};

fn main() -> drlab::Result<()> {
    let spec = ModelSpec::new(2, StarLaw::constant(2)?, 0.2)?;
    let mc = McSettings {
        count: 100_000,
        seed: 11,
        ..McSettings::default()
    };
    let r = deviation_probe(
        &spec,
        16,
        4,
        &[4, 16, 64, 256],
        &mc,
        &TruncationPolicy::default(),
    )?;
    println!(
        "P(Y_16 >= {}, 1 <= N_16 <= {}) = {:.3e} +- {:.1e}; ceiling {:.4} (H_16(2) = {:.6}); holds: {}",
        r.y_threshold, r.open_cap, r.estimate.mean, r.estimate.std_error, r.ceiling, r.h_n, r.holds
    );
    println!("P(Y_16 >= 1) = {:.4e}", r.survival.mean);
    for row in &r.small_deviation {
        println!(
            "P(N_16 <= {:>3} | Y_16 >= 1) = {:.4}",
            row.alpha, row.conditional
        );
    }
    Ok(())
}
