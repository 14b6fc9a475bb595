use serde::Serialize;

use super::IterationTrace;
use crate::dist::{
    dr_step, saturate_support, weighted_moment, IntPmf, ModelSpec, TruncationPolicy,
};
use crate::error::{Error, Result};

/// Consecutive residuals `δ_{n+1} - δ_n H_n(m)^{m-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRecursionReport {
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
    /// Largest `|δ_n - δ_0 Π_{i<n} H_i(m)^{m-1}|`, relative to `|δ_n|`.
    pub max_product_rel_error: f64,
    /// Whether every `δ_n` lies in `(0, 1]`; only meaningful below criticality.
    pub delta_in_unit_interval: bool,
}

pub fn delta_recursion_residual(trace: &IterationTrace) -> Result<DeltaRecursionReport> {
    if trace.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two generations".into(),
        ));
    }
    let e = (trace.m() - 1) as i32;
    let r = &trace.records;
    let residuals: Vec<f64> = r
        .windows(2)
        .map(|w| w[1].delta - w[0].delta * w[0].h_m.powi(e))
        .collect();
    let max_abs_residual = residuals.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut product = 1.0;
    let mut max_product_rel_error = 0.0f64;
    for rec in r {
        let want = r[0].delta * product;
        if rec.delta != 0.0 {
            max_product_rel_error =
                max_product_rel_error.max((rec.delta - want).abs() / rec.delta.abs());
        }
        product *= rec.h_m.powi(e);
    }
    let delta_in_unit_interval = r.iter().all(|x| x.delta > 0.0 && x.delta <= 1.0 + 1e-12);
    Ok(DeltaRecursionReport {
        residuals,
        max_abs_residual,
        max_product_rel_error,
        delta_in_unit_interval,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    Subcritical,
    Critical,
    Supercritical,
}

/// Running products `P_n = Π_{i<n} H_i(m)^{m-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductBoundReport {
    pub mode: ProductMode,
    pub products: Vec<f64>,
    /// `1/δ_0` below criticality.
    pub bound: Option<f64>,
    /// Extremes of `P_n / n^2` over the window at criticality.
    pub ratio_min: Option<f64>,
    pub ratio_max: Option<f64>,
    pub window: Option<(usize, usize)>,
}

impl ProductBoundReport {
    pub fn ratio_spread(&self) -> Option<f64> {
        Some(self.ratio_max? / self.ratio_min?)
    }
}

/// Below criticality, fails if a running product exceeds `(1/δ_0)(1 + 1e-8)`.
/// At criticality, reports the spread of `P_n / n^2` over `window`
/// (default: the second half of the trace).
pub fn product_bound_check(
    trace: &IterationTrace,
    window: Option<(usize, usize)>,
) -> Result<ProductBoundReport> {
    if trace.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two generations".into(),
        ));
    }
    let e = (trace.m() - 1) as i32;
    let mut products = Vec::with_capacity(trace.len());
    let mut running = 1.0;
    for rec in &trace.records {
        products.push(running);
        running *= rec.h_m.powi(e);
    }
    let spec = &trace.spec;
    let mode = if spec.p() == spec.p_c() {
        ProductMode::Critical
    } else if spec.p() < spec.p_c() {
        ProductMode::Subcritical
    } else {
        ProductMode::Supercritical
    };
    let mut report = ProductBoundReport {
        mode,
        products,
        bound: None,
        ratio_min: None,
        ratio_max: None,
        window: None,
    };
    match mode {
        ProductMode::Subcritical => {
            let bound = 1.0 / trace.records[0].delta;
            if let Some((n, v)) = report
                .products
                .iter()
                .enumerate()
                .find(|(_, v)| **v > bound * (1.0 + 1e-8))
            {
                return Err(Error::InequalityViolated(format!(
                    "running product {v} exceeds 1/delta_0 = {bound} at n = {n}"
                )));
            }
            report.bound = Some(bound);
        }
        ProductMode::Critical => {
            let last = trace.len() - 1;
            let (lo, hi) = window.unwrap_or((last / 2, last));
            if lo == 0 || lo > hi || hi > last {
                return Err(Error::InvalidArgument(format!(
                    "window ({lo}, {hi}) must lie in 1..={last}"
                )));
            }
            let ratios = (lo..=hi).map(|n| report.products[n] / (n as f64 * n as f64));
            let (mn, mx) = ratios.fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
            report.ratio_min = Some(mn);
            report.ratio_max = Some(mx);
            report.window = Some((lo, hi));
        }
        ProductMode::Supercritical => {}
    }
    Ok(report)
}

/// Outcome of the exponential contraction test at a fixed `t > m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub t: f64,
    pub start: usize,
    /// `(m/t) E(t^{X_M})^{m-1}`.
    pub theta: f64,
    pub hypothesis_met: bool,
    /// Generations `n >= M` where `E(t^{X_n})` exceeded the bound.
    pub violations: Vec<usize>,
    /// Largest `(E(t^{X_n}) - 1) / ((t - m) θ^{n-M})` seen.
    pub max_ratio: f64,
}

impl ContractionReport {
    pub fn holds(&self) -> bool {
        self.hypothesis_met && self.violations.is_empty()
    }
}

fn check_t(spec: &ModelSpec, t: f64) -> Result<()> {
    if !(t > f64::from(spec.m())) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "contraction needs a finite t > m = {}, got {t}",
            spec.m()
        )));
    }
    Ok(())
}

fn theta_of(spec: &ModelSpec, t: f64, h_t: f64) -> f64 {
    let m = f64::from(spec.m());
    let theta = m / t * h_t.powi(spec.m() as i32 - 1);
    if theta.is_finite() {
        theta
    } else {
        f64::INFINITY
    }
}

/// Support cap used by the contraction search. Values above it are lowered to
/// it, which can only lower `E(t^X)`: a `θ >= 1` found on the saturated law
/// holds for the true one, while `θ < 1` after saturation is inconclusive.
const CONTRACTION_SUPPORT_CAP: usize = 1 << 16;

fn step_clipped(
    law: &IntPmf,
    spec: &ModelSpec,
    policy: &TruncationPolicy,
    clipped: &mut bool,
) -> Result<IntPmf> {
    let next = dr_step(law, spec.m(), policy)?;
    if next.max_value() > CONTRACTION_SUPPORT_CAP {
        *clipped = true;
        return Ok(saturate_support(&next, CONTRACTION_SUPPORT_CAP));
    }
    Ok(next)
}

fn inconclusive(n: usize) -> Error {
    Error::InvalidArgument(format!(
        "contraction found at generation {n} only after saturating the support at {CONTRACTION_SUPPORT_CAP}"
    ))
}

/// First `M <= n_cap` with `(m/t) E(t^{X_M})^{m-1} < 1`.
pub fn first_contracting_index(
    spec: &ModelSpec,
    policy: &TruncationPolicy,
    t: f64,
    n_cap: usize,
) -> Result<Option<usize>> {
    check_t(spec, t)?;
    let mut law = spec.initial_law();
    let mut clipped = false;
    for n in 0..=n_cap {
        if theta_of(spec, t, weighted_moment(&law, 0, t)) < 1.0 {
            return if clipped {
                Err(inconclusive(n))
            } else {
                Ok(Some(n))
            };
        }
        if n < n_cap {
            law = step_clipped(&law, spec, policy, &mut clipped)?;
        }
    }
    Ok(None)
}

/// Checks `E(t^{X_n}) <= 1 + (t - m) θ^{n-M} (1 + 1e-8)` for `n` in
/// `M..=n_max`, when `θ < 1`.
pub fn contraction_monitor(
    spec: &ModelSpec,
    policy: &TruncationPolicy,
    t: f64,
    start: usize,
    n_max: usize,
) -> Result<ContractionReport> {
    check_t(spec, t)?;
    if start > n_max {
        return Err(Error::InvalidArgument(format!(
            "M = {start} beyond n_max = {n_max}"
        )));
    }
    let m = f64::from(spec.m());
    let mut law = spec.initial_law();
    let mut clipped = false;
    for _ in 0..start {
        law = step_clipped(&law, spec, policy, &mut clipped)?;
    }
    let theta = theta_of(spec, t, weighted_moment(&law, 0, t));
    if clipped && theta < 1.0 {
        return Err(inconclusive(start));
    }
    let mut report = ContractionReport {
        t,
        start,
        theta,
        hypothesis_met: theta < 1.0,
        violations: Vec::new(),
        max_ratio: 0.0,
    };
    if !report.hypothesis_met {
        return Ok(report);
    }
    for n in start..=n_max {
        if n > start {
            law = dr_step(&law, spec.m(), policy)?;
        }
        let lhs = weighted_moment(&law, 0, t);
        let slack = (t - m) * theta.powi((n - start) as i32);
        if lhs > 1.0 + slack * (1.0 + 1e-8) {
            report.violations.push(n);
        }
        if slack > 0.0 {
            report.max_ratio = report.max_ratio.max((lhs - 1.0) / slack);
        }
    }
    Ok(report)
}

/// Lower bound `E(X_n) >= p m^n P(X* >= n+1)` along a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanLowerBoundReport {
    /// `(n, E(X_n), bound, allowance)` per generation.
    pub rows: Vec<(usize, f64, f64, f64)>,
    pub holds: bool,
}

/// The allowance covers clipped mass: a unit clipped at value `v` in
/// generation `j` lowers `X_n` by at most `v` in each of the `m^{n-j}`
/// copies feeding generation `n`.
pub fn mean_lower_bound_check(spec: &ModelSpec, trace: &IterationTrace) -> MeanLowerBoundReport {
    let m = f64::from(spec.m());
    let mut allowance = 0.0;
    let mut rows = Vec::with_capacity(trace.len());
    let mut holds = true;
    for (i, rec) in trace.records.iter().enumerate() {
        if i > 0 {
            let prev = &trace.records[i - 1];
            let clipped = rec.defect - prev.defect;
            allowance = allowance * m + clipped * m * prev.support as f64;
        }
        let n = rec.n;
        let bound = spec.p() * m.powi(n as i32) * spec.star().tail(n as u64 + 1);
        if rec.mean < bound - allowance {
            holds = false;
        }
        rows.push((n, rec.mean, bound, allowance));
    }
    MeanLowerBoundReport { rows, holds }
}

/// Supremum of `H_n(m)` against `m^{1/(m-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeilingReport {
    pub sup_h: f64,
    pub argmax: usize,
    pub ceiling: f64,
    pub holds: bool,
}

pub fn criticality_ceiling(trace: &IterationTrace) -> CeilingReport {
    let m = f64::from(trace.m());
    let ceiling = m.powf(1.0 / (m - 1.0));
    let (argmax, sup_h) = trace
        .records
        .iter()
        .map(|r| (r.n, r.h_m))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    CeilingReport {
        sup_h,
        argmax,
        ceiling,
        holds: sup_h <= ceiling + 1e-9,
    }
}

/// First generation whose manifold residual has covered half of its total
/// range along the trace. Exploratory; nothing is asserted about it.
pub fn manifest_departure(trace: &IterationTrace) -> Option<usize> {
    let d: Vec<f64> = trace.records.iter().map(|r| r.delta).collect();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let half = 0.5 * (hi - lo);
    trace
        .records
        .iter()
        .find(|r| (r.delta - d[0]).abs() > half)
        .map(|r| r.n)
}

/// Ratios `E(X_n^2 s_n^{X_n}) / n` with `s_n = m + c/n` for a user-chosen `c`.
/// Reported only: the constant that would bound them is not known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMonitor {
    pub c: f64,
    pub ratios: Vec<(usize, f64)>,
}

pub fn moment_monitor(
    spec: &ModelSpec,
    policy: &TruncationPolicy,
    c: f64,
    n_max: usize,
) -> Result<MomentMonitor> {
    let m = f64::from(spec.m());
    let mut law = spec.initial_law();
    let mut ratios = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        law = dr_step(&law, spec.m(), policy)?;
        let s = m + c / n as f64;
        ratios.push((n, weighted_moment(&law, 2, s) / n as f64));
    }
    Ok(MomentMonitor { c, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::iterate_trace;
    use crate::dist::StarLaw;

    fn two() -> StarLaw {
        StarLaw::constant(2).unwrap()
    }

    #[test]
    fn delta_recursion_holds_below_criticality() {
        let spec = ModelSpec::new(2, two(), 0.15).unwrap();
        let t = iterate_trace(&spec, 200, &TruncationPolicy::default()).unwrap();
        let r = delta_recursion_residual(&t).unwrap();
        assert!(r.max_abs_residual <= 1e-9);
        assert!(r.max_product_rel_error <= 1e-8);
        assert!(r.delta_in_unit_interval);
    }

    #[test]
    fn delta_recursion_trivial_at_zero() {
        let spec = ModelSpec::new(2, two(), 0.0).unwrap();
        let t = iterate_trace(&spec, 20, &TruncationPolicy::default()).unwrap();
        let r = delta_recursion_residual(&t).unwrap();
        assert!(t.records.iter().all(|x| x.delta == 1.0));
        assert!(r.residuals.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn product_bound_below_criticality() {
        let spec = ModelSpec::new(2, two(), 0.15).unwrap();
        let t = iterate_trace(&spec, 300, &TruncationPolicy::default()).unwrap();
        let r = product_bound_check(&t, None).unwrap();
        assert_eq!(r.mode, ProductMode::Subcritical);
        assert!((r.bound.unwrap() - 4.0).abs() < 1e-12);

        let zero = ModelSpec::new(2, two(), 0.0).unwrap();
        let t = iterate_trace(&zero, 10, &TruncationPolicy::default()).unwrap();
        let r = product_bound_check(&t, None).unwrap();
        assert!(r.products.iter().all(|&v| v == 1.0));
        assert_eq!(r.bound, Some(1.0));
    }

    #[test]
    fn contraction_examples() {
        let zero = ModelSpec::new(2, two(), 0.0).unwrap();
        let r = contraction_monitor(&zero, &TruncationPolicy::default(), 3.0, 0, 50).unwrap();
        assert!(r.holds());
        assert!((r.theta - 2.0 / 3.0).abs() < 1e-15);

        let sub = ModelSpec::new(2, two(), 0.1).unwrap();
        let policy = TruncationPolicy::default();
        let start = first_contracting_index(&sub, &policy, 2.5, 200)
            .unwrap()
            .unwrap();
        let r = contraction_monitor(&sub, &policy, 2.5, start, 500).unwrap();
        assert!(r.holds(), "{:?}", r.violations);

        let sup = ModelSpec::new(2, two(), 0.3).unwrap();
        assert_eq!(
            first_contracting_index(&sup, &policy, 2.5, 100).unwrap(),
            None
        );
        assert!(contraction_monitor(&sub, &policy, 2.0, 0, 5).is_err());
    }

    #[test]
    fn mean_lower_bound_examples() {
        let star = StarLaw::uniform(1, 5).unwrap();
        let spec = ModelSpec::new(2, star, 0.1).unwrap();
        let t = iterate_trace(&spec, 6, &TruncationPolicy::none()).unwrap();
        let r = mean_lower_bound_check(&spec, &t);
        assert!(r.holds);
        let (_, mean3, bound3, _) = r.rows[3];
        assert!((bound3 - 0.32).abs() < 1e-15);
        assert!(mean3 >= bound3);
        assert_eq!(r.rows[5].2, 0.0);

        let zero = ModelSpec::new(2, StarLaw::uniform(1, 5).unwrap(), 0.0).unwrap();
        let t = iterate_trace(&zero, 4, &TruncationPolicy::none()).unwrap();
        assert!(mean_lower_bound_check(&zero, &t)
            .rows
            .iter()
            .all(|r| r.1 == 0.0 && r.2 == 0.0));
    }

    #[test]
    fn ceiling_at_criticality() {
        let spec = ModelSpec::new(2, two(), 0.2).unwrap();
        let t = iterate_trace(&spec, 200, &TruncationPolicy::default()).unwrap();
        let c = criticality_ceiling(&t);
        assert!(c.holds);
        assert_eq!(c.ceiling, 2.0);
    }
}
