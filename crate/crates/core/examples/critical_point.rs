//! Critical point of a few star laws, and the manifold residual of the
//! initial law on either side of it.

use drlab::analytics::{critical_p, delta};
use drlab::dist::{ModelSpec, StarLaw};

fn main() -> drlab::Result<()> {
    let laws = [
        ("constant 2", StarLaw::constant(2)?),
        ("uniform 1..=2", StarLaw::uniform(1, 2)?),
        ("uniform 1..=5", StarLaw::uniform(1, 5)?),
        ("{1: 0.7, 3: 0.3}", StarLaw::new([(1, 0.7), (3, 0.3)])?),
    ];
    for m in [2, 3] {
        for (name, star) in &laws {
            let p_c = critical_p(star, m);
            let below = ModelSpec::new(m, star.clone(), 0.5 * p_c)?;
            let at = below.at_criticality();
            println!(
                "m={m} star {name:<18} p_c = {p_c:.15}  delta_0 at p_c/2 = {:+.3e}, at p_c = {:+.3e}",
                delta(&below.initial_law(), m),
                delta(&at.initial_law(), m),
            );
        }
    }
    Ok(())
}
