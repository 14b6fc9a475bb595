//! Exponential contraction of `E(t^{X_n})` below criticality once
//! `(m/t) E(t^{X_M})^{m-1} < 1` at some generation `M`.

use drlab::analytics::{contraction_monitor, first_contracting_index};
use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};

fn main() -> drlab::Result<()> {
    let spec = ModelSpec::new(2, StarLaw::constant(2)?, 0.15)?;
    let policy = TruncationPolicy::default();
    for t in [2.5, 3.0, 4.0] {
        match first_contracting_index(&spec, &policy, t, 500)? {
            Some(start) => {
                let r = contraction_monitor(&spec, &policy, t, start, start + 200)?;
                println!(
                    "t = {t}: M = {start}, theta = {:.4}, bound holds for 200 generations: {}",
                    r.theta,
                    r.holds()
                );
            }
            None => println!("t = {t}: no contracting generation before 500"),
        }
    }
    Ok(())
}
