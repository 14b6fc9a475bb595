use serde::Serialize;

use super::IterationTrace;
use crate::error::{Error, Result};

/// End of the default κ window: the last generation whose mean is still at
/// least this large.
pub const KAPPA_FLOOR: f64 = 1e-250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Kappa,
    LoglogSlope,
    FreeEnergy,
}

/// Result of a regression on log scale.
///
/// For `FreeEnergy` there is no regression: `slope` holds the estimate
/// `E(X_n)/m^n` at the last generation, `intercept` is zero and
/// `max_residual` is the largest relative increase seen along the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Inclusive index window.
    pub window: (usize, usize),
    pub max_residual: f64,
    pub kind: FitKind,
}

/// Unweighted least squares `y ~ slope * x + intercept`, with the largest
/// absolute residual.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "a line needs two points");
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).abs())
        .fold(0.0, f64::max);
    (slope, intercept, max_residual)
}

fn check_window(len: usize, window: (usize, usize), min_points: usize) -> Result<()> {
    let (lo, hi) = window;
    if lo >= hi || hi >= len {
        return Err(Error::InvalidArgument(format!(
            "window ({lo}, {hi}) is not an increasing range inside 0..{len}"
        )));
    }
    if hi - lo + 1 < min_points {
        return Err(Error::InvalidArgument(format!(
            "window ({lo}, {hi}) has fewer than {min_points} points"
        )));
    }
    Ok(())
}

/// Slope of `n -> -log E(X_n)` over `window`, where `means[n] = E(X_n)`.
pub fn kappa_fit_series(means: &[f64], window: (usize, usize)) -> Result<FitResult> {
    check_window(means.len(), window, 10)?;
    let (lo, hi) = window;
    if let Some(bad) = (lo..=hi).find(|&n| !(means[n] > 0.0)) {
        return Err(Error::TraceExhausted { index: bad });
    }
    let x: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let y: Vec<f64> = (lo..=hi).map(|n| -means[n].ln()).collect();
    let (slope, intercept, max_residual) = linear_fit(&x, &y);
    Ok(FitResult {
        slope,
        intercept,
        window,
        max_residual,
        kind: FitKind::Kappa,
    })
}

/// κ̂ over a window of generation indices of the trace.
pub fn kappa_fit(trace: &IterationTrace, window: (usize, usize)) -> Result<FitResult> {
    kappa_fit_series(&trace.means(), window)
}

/// Burn-in `max(50, ceil(5 / sqrt(epsilon)))` up to the last generation with
/// mean at least [`KAPPA_FLOOR`].
pub fn default_kappa_window(means: &[f64], epsilon: f64) -> Result<(usize, usize)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa window needs epsilon > 0, got {epsilon}"
        )));
    }
    let lo = 50usize.max((5.0 / epsilon.sqrt()).ceil() as usize);
    let hi = match means.iter().position(|&v| !(v >= KAPPA_FLOOR)) {
        Some(0) => return Err(Error::TraceExhausted { index: 0 }),
        Some(first_low) => first_low - 1,
        None => means.len().saturating_sub(1),
    };
    if hi < lo + 9 {
        return Err(Error::InvalidArgument(format!(
            "trace ends at generation {hi}, before a 10-point window after burn-in {lo}"
        )));
    }
    Ok((lo, hi))
}

/// Slope of `log y` against `log x` over an inclusive index window.
pub fn loglog_slope(xs: &[f64], ys: &[f64], window: (usize, usize)) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    check_window(xs.len(), window, 2)?;
    let (lo, hi) = window;
    if let Some(i) = (lo..=hi).find(|&i| !(xs[i] > 0.0 && ys[i] > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "nonpositive entry at index {i}: ({}, {})",
            xs[i], ys[i]
        )));
    }
    let lx: Vec<f64> = xs[lo..=hi].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys[lo..=hi].iter().map(|v| v.ln()).collect();
    let (slope, intercept, max_residual) = linear_fit(&lx, &ly);
    Ok(FitResult {
        slope,
        intercept,
        window,
        max_residual,
        kind: FitKind::LoglogSlope,
    })
}

/// Slope of `log κ̂` against `log ε` over `(ε, κ̂)` pairs, in any order.
pub fn exponent_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need ≥ 2 points for an exponent fit, got {}",
            points.len()
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (xs, ys): (Vec<f64>, Vec<f64>) = sorted.into_iter().unzip();
    loglog_slope(&xs, &ys, (0, xs.len() - 1))
}

/// Whether `κ̂` strictly increases with `ε`.
pub fn strictly_increasing(points: &[(f64, f64)]) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted
        .windows(2)
        .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
}

/// Last value of `E(X_n)/m^n`, certified non-increasing along the trace.
pub fn free_energy_estimate(trace: &IterationTrace) -> Result<FitResult> {
    let ln_m = f64::from(trace.m()).ln();
    // Log form keeps m^n finite for any n.
    let f: Vec<f64> = trace
        .records
        .iter()
        .map(|r| {
            if r.mean > 0.0 {
                (r.mean.ln() - r.n as f64 * ln_m).exp()
            } else {
                0.0
            }
        })
        .collect();
    let mut worst = 0.0f64;
    for (n, w) in f.windows(2).enumerate() {
        if w[1] > w[0] {
            let rel = (w[1] - w[0]) / w[0];
            if rel > 1e-12 {
                return Err(Error::InequalityViolated(format!(
                    "E(X_n)/m^n increases by a relative {rel:e} at n = {}",
                    n + 1
                )));
            }
            worst = worst.max(rel);
        }
    }
    Ok(FitResult {
        slope: *f.last().expect("a trace holds generation 0"),
        intercept: 0.0,
        window: (0, f.len() - 1),
        max_residual: worst,
        kind: FitKind::FreeEnergy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::iterate_trace;
    use crate::dist::{ModelSpec, StarLaw, TruncationPolicy};

    #[test]
    fn kappa_on_exact_exponential() {
        let means: Vec<f64> = (0..100).map(|n| (-0.3 * n as f64).exp()).collect();
        let fit = kappa_fit_series(&means, (10, 90)).unwrap();
        assert!((fit.slope - 0.3).abs() < 1e-12);
        assert_eq!(fit.kind, FitKind::Kappa);
    }

    #[test]
    fn kappa_under_bounded_perturbation() {
        let means: Vec<f64> = (0..400)
            .map(|n| 3.0 * (-0.2 * n as f64).exp() * (1.0 + if n % 2 == 0 { 1e-3 } else { -1e-3 }))
            .collect();
        let fit = kappa_fit_series(&means, (50, 399)).unwrap();
        assert!((fit.slope - 0.2).abs() < 1e-3);
    }

    #[test]
    fn kappa_rejects_exhausted_window() {
        let mut means = vec![1.0; 30];
        means[17] = 0.0;
        assert_eq!(
            kappa_fit_series(&means, (5, 25)),
            Err(Error::TraceExhausted { index: 17 })
        );
        assert!(kappa_fit_series(&means, (0, 5)).is_err());
    }

    #[test]
    fn default_window() {
        let means: Vec<f64> = (0..3000).map(|n| (-0.25 * n as f64).exp()).collect();
        let (lo, hi) = default_kappa_window(&means, 0.005).unwrap();
        assert_eq!(lo, 71);
        assert!(means[hi] >= KAPPA_FLOOR && means[hi + 1] < KAPPA_FLOOR);
        assert_eq!(default_kappa_window(&means, 0.04).unwrap().0, 50);
    }

    #[test]
    fn loglog_examples() {
        let xs: Vec<f64> = (1..50).map(f64::from).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let rt: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
        assert!((loglog_slope(&xs, &sq, (0, 48)).unwrap().slope - 2.0).abs() < 1e-12);
        assert!((loglog_slope(&xs, &rt, (0, 48)).unwrap().slope - 0.5).abs() < 1e-12);
        let mut bad = sq.clone();
        bad[3] = 0.0;
        assert!(loglog_slope(&xs, &bad, (0, 48)).is_err());
    }

    #[test]
    fn free_energy_examples() {
        let star = StarLaw::constant(2).unwrap();
        let full = ModelSpec::new(2, star.clone(), 1.0).unwrap();
        let t = iterate_trace(&full, 10, &TruncationPolicy::none()).unwrap();
        let fe = free_energy_estimate(&t).unwrap();
        assert!((fe.slope - 1025.0 / 1024.0).abs() < 1e-12);

        let none = ModelSpec::new(2, star.clone(), 0.0).unwrap();
        let t = iterate_trace(&none, 10, &TruncationPolicy::none()).unwrap();
        assert_eq!(free_energy_estimate(&t).unwrap().slope, 0.0);

        let sub = ModelSpec::new(2, star, 0.15).unwrap();
        let t = iterate_trace(&sub, 300, &TruncationPolicy::weighted(1e-280)).unwrap();
        let fe = free_energy_estimate(&t).unwrap();
        let means = t.means();
        let kappa = kappa_fit_series(&means, (100, 300)).unwrap().slope;
        assert!(kappa > 0.0);
        assert!(fe.slope <= (-kappa * 300.0).exp() * means[0]);
    }

    #[test]
    fn exponent_of_synthetic_sweep() {
        let mut points = Vec::new();
        for eps in [0.04f64, 0.02, 0.01, 0.005] {
            let means: Vec<f64> = (0..400)
                .map(|n| 2.0 * (-eps.sqrt() * n as f64).exp())
                .collect();
            points.push((eps, kappa_fit_series(&means, (100, 399)).unwrap().slope));
        }
        let fit = exponent_fit(&points).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-6);
        assert!(strictly_increasing(&points));
        let err = exponent_fit(&points[..1]).unwrap_err();
        assert!(err.to_string().contains("need ≥ 2 points"));
        assert!(!strictly_increasing(&[(0.1, 2.0), (0.2, 1.0)]));
    }
}
