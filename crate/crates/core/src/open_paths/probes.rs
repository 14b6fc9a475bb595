use serde::Serialize;

use super::mc::{mc_estimate_vec, McEstimate};
use super::transform::{transform_init, transform_step};
use super::tree::{CriticalSampler, DEFAULT_NODE_BUDGET};
use crate::dist::{gen_fn, LawIter, ModelSpec, TruncationPolicy};
use crate::error::{Error, Result};

/// Sampling settings shared by the Monte Carlo probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSettings {
    pub count: u64,
    pub seed: u64,
    pub workers: usize,
    pub node_budget: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            count: 100_000,
            seed: 1,
            workers: 1,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Exact and sampled `E[θ^{N_n} 1{Y_n >= 1}]` for one `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformCheck {
    pub theta: f64,
    pub exact: f64,
    pub estimate: McEstimate,
    /// `|estimate - exact|` in standard errors.
    pub z: f64,
}

/// Compares the transform with tree samples at generation `n`. All `θ` share
/// the same samples.
pub fn transform_mc_check(
    critical: &ModelSpec,
    n: u32,
    thetas: &[f64],
    mc: &McSettings,
    policy: &TruncationPolicy,
) -> Result<Vec<TransformCheck>> {
    let sampler = CriticalSampler::new(critical, n, mc.node_budget)?;
    let mut exact = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut t = transform_init(critical, theta, policy)?;
        for _ in 0..n {
            t = transform_step(&t)?;
        }
        exact.push(t.positive());
    }
    let est = mc_estimate_vec(thetas.len(), mc.count, mc.seed, mc.workers, |rng, out| {
        let s = sampler.sample(rng);
        for (o, &theta) in out.iter_mut().zip(thetas) {
            // powf gives 0^0 = 1, matching θ^N = 1{N = 0} at θ = 0
            *o = if s.y >= 1 {
                theta.powf(s.n as f64)
            } else {
                0.0
            };
        }
        Ok(())
    })?;
    Ok(thetas
        .iter()
        .zip(exact)
        .zip(est)
        .map(|((&theta, exact), estimate)| TransformCheck {
            theta,
            exact,
            estimate,
            z: if estimate.std_error > 0.0 {
                (estimate.mean - exact).abs() / estimate.std_error
            } else if estimate.mean == exact {
                0.0
            } else {
                f64::INFINITY
            },
        })
        .collect())
}

/// One row of the conditional small-deviation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallDeviationRow {
    pub alpha: u64,
    /// `P(N_n <= alpha, Y_n >= 1)`.
    pub joint: McEstimate,
    /// `P(N_n <= alpha | Y_n >= 1)` as a ratio of the two estimates.
    pub conditional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub n: u32,
    pub j: u32,
    /// `ceil(n / j)`.
    pub y_threshold: u64,
    /// `j n`.
    pub open_cap: u64,
    /// `P(Y_n >= ceil(n/j), 1 <= N_n <= j n)`.
    pub estimate: McEstimate,
    /// `E[m^{Y_n}]` from the exact critical iteration.
    pub h_n: f64,
    /// `m^{-n/j} H_n(m)`.
    pub bound: f64,
    /// `bound (1 + 4 relative standard error)`.
    pub ceiling: f64,
    pub holds: bool,
    pub survival: McEstimate,
    pub small_deviation: Vec<SmallDeviationRow>,
}

/// Samples the event `{Y_n >= n/j, 1 <= N_n <= j n}` at criticality and
/// compares it with the exponential ceiling. `alphas` select the
/// conditional estimates `P(N_n <= alpha | Y_n >= 1)` that are reported
/// alongside.
pub fn deviation_probe(
    critical: &ModelSpec,
    n: u32,
    j: u32,
    alphas: &[u64],
    mc: &McSettings,
    policy: &TruncationPolicy,
) -> Result<DeviationReport> {
    if j == 0 {
        return Err(Error::InvalidArgument("j must be >= 1".into()));
    }
    let critical = critical.at_criticality();
    let sampler = CriticalSampler::new(&critical, n, mc.node_budget)?;
    let y_threshold = u64::from(n.div_ceil(j));
    let open_cap = u64::from(j) * u64::from(n);

    let stats = 2 + alphas.len();
    let est = mc_estimate_vec(stats, mc.count, mc.seed, mc.workers, |rng, out| {
        let s = sampler.sample(rng);
        let alive = s.y >= 1;
        out[0] = f64::from(u8::from(s.y >= y_threshold && s.n >= 1 && s.n <= open_cap));
        out[1] = f64::from(u8::from(alive));
        for (o, &a) in out[2..].iter_mut().zip(alphas) {
            *o = f64::from(u8::from(alive && s.n <= a));
        }
        Ok(())
    })?;

    let law = LawIter::new(critical.initial_law(), critical.m(), *policy)
        .nth(n as usize)
        .expect("law iterator is unbounded")?;
    let m = f64::from(critical.m());
    let h_n = gen_fn(&law, m);
    let bound = m.powf(-f64::from(n) / f64::from(j)) * h_n;
    let estimate = est[0];
    let ceiling = bound * (1.0 + 4.0 * estimate.relative_error());
    let survival = est[1];
    let small_deviation = alphas
        .iter()
        .zip(&est[2..])
        .map(|(&alpha, &joint)| SmallDeviationRow {
            alpha,
            joint,
            conditional: if survival.mean > 0.0 {
                joint.mean / survival.mean
            } else {
                f64::NAN
            },
        })
        .collect();
    Ok(DeviationReport {
        n,
        j,
        y_threshold,
        open_cap,
        estimate,
        h_n,
        bound,
        ceiling,
        holds: estimate.mean <= ceiling,
        survival,
        small_deviation,
    })
}
