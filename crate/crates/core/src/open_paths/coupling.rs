use serde::Serialize;

use super::transform::{transform_init, transform_step};
use crate::dist::{dr_step, survival, ModelSpec, TruncationPolicy};
use crate::error::{Error, Result};

/// One generation of the comparison `P(X_n >= 1)` against
/// `E[(p/p_c)^{N_n} 1{Y_n >= 1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingRow {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub margin: f64,
    /// How far truncation can have lowered `lhs`: mass clipped at
    /// generation `k` can reach the root through at most `m^{n-k}` vertices.
    pub lhs_allowance: f64,
    /// How far cutting `a_n` can have lowered `rhs`.
    pub rhs_allowance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub p: f64,
    pub p_c: f64,
    pub theta: f64,
    pub rows: Vec<CouplingRow>,
    pub min_margin: f64,
    pub holds: bool,
}

/// Exact both sides of the coupling inequality for generations `0..=n`.
pub fn coupling_check(
    spec: &ModelSpec,
    n: usize,
    policy: &TruncationPolicy,
) -> Result<CouplingReport> {
    if !(spec.p() > 0.0 && spec.p() < spec.p_c()) {
        return Err(Error::InvalidModel(format!(
            "coupling needs 0 < p < p_c, got p = {} with p_c = {}",
            spec.p(),
            spec.p_c()
        )));
    }
    let m = f64::from(spec.m());
    let theta = spec.p() / spec.p_c();
    let mut law = spec.initial_law();
    let mut t = transform_init(spec, theta, policy)?;
    let mut allowance = 0.0;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            let before = law.defect();
            law = dr_step(&law, spec.m(), policy)?;
            allowance = allowance * m + (law.defect() - before);
            t = transform_step(&t)?;
        }
        let (lhs, rhs) = (survival(&law), t.positive());
        rows.push(CouplingRow {
            n: k,
            lhs,
            rhs,
            margin: lhs - rhs,
            lhs_allowance: allowance,
            rhs_allowance: t.cut_allowance(),
            holds: lhs - rhs >= -allowance,
        });
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let holds = rows.iter().all(|r| r.holds);
    Ok(CouplingReport {
        p: spec.p(),
        p_c: spec.p_c(),
        theta,
        rows,
        min_margin,
        holds,
    })
}
