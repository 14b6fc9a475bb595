//! Iterates the law of `X_n` and prints the scalar trace.
//!
//! Usage: `cargo run --release --example iterate_law -- [p] [n_max]`

use drlab::analytics::iterate_trace;
use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};

fn main() -> drlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: f64 = args.next().map_or(0.15, |a| a.parse().expect("p"));
    let n_max: usize = args.next().map_or(40, |a| a.parse().expect("n_max"));

    let spec = ModelSpec::new(2, StarLaw::constant(2)?, p)?;
    let trace = iterate_trace(&spec, n_max, &TruncationPolicy::default())?;
    println!("p = {p}, p_c = {}", spec.p_c());
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>12} {:>10} {:>7}",
        "n", "mean", "survival", "H(m)", "delta", "defect", "support"
    );
    for r in trace.records.iter().step_by((n_max / 20).max(1)) {
        println!(
            "{:>5} {:>12.5e} {:>12.5e} {:>12.8} {:>12.5e} {:>10.2e} {:>7}",
            r.n, r.mean, r.survival, r.h_m, r.delta, r.defect, r.support
        );
    }
    Ok(())
}
