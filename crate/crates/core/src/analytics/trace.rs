use serde::Serialize;

use super::delta;
use crate::dist::{dr_step, gen_fn, h_prime, mean, survival, IntPmf, ModelSpec, TruncationPolicy};
use crate::error::Result;

/// Scalars of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub n: usize,
    pub mean: f64,
    pub survival: f64,
    pub h_m: f64,
    pub h1_m: f64,
    pub delta: f64,
    pub defect: f64,
    /// Largest value carried by the stored law.
    pub support: usize,
}

impl TraceRecord {
    pub fn of(n: usize, law: &IntPmf, m: u32) -> Self {
        let mf = f64::from(m);
        Self {
            n,
            mean: mean(law),
            survival: survival(law),
            h_m: gen_fn(law, mf),
            h1_m: h_prime(law, mf),
            delta: delta(law, m),
            defect: law.defect(),
            support: law.max_value(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub spec: ModelSpec,
    pub policy: TruncationPolicy,
    pub records: Vec<TraceRecord>,
    /// Law at the last recorded generation.
    #[serde(skip)]
    pub last_law: IntPmf,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn m(&self) -> u32 {
        self.spec.m()
    }

    pub fn means(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean).collect()
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace holds generation 0")
    }
}

/// Records generations `0..=n_max`.
pub fn iterate_trace(
    spec: &ModelSpec,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<IterationTrace> {
    iterate_trace_until(spec, policy, n_max, |_| false)
}

/// Records generations until `stop` holds for a record (that record is kept)
/// or `n_cap` is reached.
pub fn iterate_trace_until(
    spec: &ModelSpec,
    policy: &TruncationPolicy,
    n_cap: usize,
    stop: impl Fn(&TraceRecord) -> bool,
) -> Result<IterationTrace> {
    let m = spec.m();
    let mut law = spec.initial_law();
    let mut records = vec![TraceRecord::of(0, &law, m)];
    let mut n = 0;
    while n < n_cap && !stop(records.last().expect("nonempty")) {
        law = dr_step(&law, m, policy)?;
        n += 1;
        records.push(TraceRecord::of(n, &law, m));
    }
    Ok(IterationTrace {
        spec: spec.clone(),
        policy: *policy,
        records,
        last_law: law,
    })
}
