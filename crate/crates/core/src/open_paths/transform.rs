use serde::Serialize;

use crate::dist::{
    dr_step, kernel, survival, unscale, IntPmf, ModelSpec, Series, TruncationPolicy,
};
use crate::error::{Error, Result};

/// The sequence `a_n(y) = E[θ^{N_n} 1{Y_n = y}]` of the critical system,
/// advanced together with the law of `Y_n` (its companion).
///
/// `a` is stored like the companion: value at zero, then a tilted, scaled
/// tail with the companion's tilt.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenPathTransform {
    theta: f64,
    n: usize,
    a_zero: f64,
    a_tail: Vec<f64>,
    a_log_scale: f64,
    companion: IntPmf,
    m: u32,
    policy: TruncationPolicy,
    /// Bound on how much `Σ_y a_n(y)` was lowered by cutting `a` at the
    /// companion's support.
    cut_allowance: f64,
}

/// Snapshot of one generation of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformRecord {
    pub n: usize,
    /// `E[θ^{N_n} 1{Y_n >= 1}]`.
    pub positive: f64,
    /// `Σ_y a_n(y) = E[θ^{N_n}]`.
    pub total: f64,
    /// `P(Y_n >= 1)` from the companion.
    pub companion_survival: f64,
    pub companion_defect: f64,
    pub cut_allowance: f64,
}

/// Transform at generation 0: every leaf is the end of its own open path, so
/// `a_0(y) = θ P(Y_0 = y)`.
pub fn transform_init(
    critical: &ModelSpec,
    theta: f64,
    policy: &TruncationPolicy,
) -> Result<OpenPathTransform> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta = {theta} outside [0, 1]"
        )));
    }
    let companion = critical.at_criticality().initial_law();
    let s = companion.series();
    Ok(OpenPathTransform {
        theta,
        n: 0,
        a_zero: theta * s.zero,
        a_tail: s.tail.iter().map(|v| theta * v).collect(),
        a_log_scale: s.log_scale,
        companion,
        m: critical.m(),
        policy: *policy,
        cut_allowance: 0.0,
    })
}

/// One generation: `a'(y) = a^{*m}(y+1)` for `y >= 1` and
/// `a'(0) = a^{*m}(1) + P(Y = 0)^m`.
pub fn transform_step(t: &OpenPathTransform) -> Result<OpenPathTransform> {
    let m = t.m;
    let tilt = t.companion.tilt();
    let a = Series {
        zero: t.a_zero,
        tail: t.a_tail.clone(),
        log_scale: t.a_log_scale,
    };
    let s = a.power(m);
    let at_one = unscale(
        s.tail.get(1).copied().unwrap_or(0.0),
        s.log_scale - tilt.ln(),
    );
    let all_closed = t.companion.effective_zero().powi(m as i32);
    let mut tail: Vec<f64> = if s.tail.len() > 2 {
        std::iter::once(0.0)
            .chain(s.tail[2..].iter().map(|v| v / tilt))
            .collect()
    } else {
        Vec::new()
    };

    let companion = dr_step(&t.companion, m, &t.policy)?;
    let mut cut = 0.0;
    let keep = companion.stored_tail().len();
    if tail.len() > keep {
        cut = kernel::weighted_series(&tail, 1.0 / tilt, keep.max(1), s.log_scale, |_| 1.0);
        tail.truncate(keep);
    }
    let mut next = Series {
        zero: at_one + all_closed,
        tail,
        log_scale: s.log_scale,
    };
    next.tidy();
    Ok(OpenPathTransform {
        theta: t.theta,
        n: t.n + 1,
        a_zero: next.zero,
        a_tail: next.tail,
        a_log_scale: next.log_scale,
        companion,
        m,
        policy: t.policy,
        // Σ a' is at most m times as sensitive to Σ a as a power of a
        // sub-probability, so earlier cuts grow by at most m per generation.
        cut_allowance: f64::from(m) * t.cut_allowance + cut,
    })
}

impl OpenPathTransform {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn companion(&self) -> &IntPmf {
        &self.companion
    }

    pub fn cut_allowance(&self) -> f64 {
        self.cut_allowance
    }

    /// `a_n(y)`.
    pub fn a(&self, y: usize) -> f64 {
        match y {
            0 => self.a_zero,
            _ if y < self.a_tail.len() => unscale(
                self.a_tail[y],
                self.a_log_scale - y as f64 * self.companion.tilt().ln(),
            ),
            _ => 0.0,
        }
    }

    /// `a_n(0), a_n(1), ...` up to the last stored value.
    pub fn a_values(&self) -> Vec<f64> {
        (0..self.a_tail.len().max(1)).map(|y| self.a(y)).collect()
    }

    /// `E[θ^{N_n} 1{Y_n >= 1}] = Σ_{y>=1} a_n(y)`.
    pub fn positive(&self) -> f64 {
        kernel::weighted_series(
            &self.a_tail,
            1.0 / self.companion.tilt(),
            1,
            self.a_log_scale,
            |_| 1.0,
        )
    }

    /// `E[θ^{N_n}]`.
    pub fn total(&self) -> f64 {
        self.a_zero + self.positive()
    }

    /// `P(N_n >= 1) = 1 - Σ_y a_n(y)`; meaningful at `θ = 0` only.
    pub fn open_probability(&self) -> f64 {
        1.0 - self.total()
    }

    /// Largest `a_n(y) / P(Y_n = y)` minus one over `y`, zero when every
    /// entry is dominated. Atom at zero compared on the effective law.
    pub fn domination_excess(&self) -> f64 {
        let c = &self.companion;
        let mut worst = (self.a_zero - c.effective_zero()).max(0.0);
        for y in 1..self.a_tail.len() {
            let (a, p) = (self.a(y), c.prob(y));
            if a > p {
                worst = worst.max(if p > 0.0 { a / p - 1.0 } else { f64::INFINITY });
            }
        }
        worst
    }

    pub fn record(&self) -> TransformRecord {
        TransformRecord {
            n: self.n,
            positive: self.positive(),
            total: self.total(),
            companion_survival: survival(&self.companion),
            companion_defect: self.companion.defect(),
            cut_allowance: self.cut_allowance,
        }
    }
}

/// Records of generations `0..=n_max`.
pub fn transform_trace(
    critical: &ModelSpec,
    theta: f64,
    n_max: usize,
    policy: &TruncationPolicy,
) -> Result<Vec<TransformRecord>> {
    let mut t = transform_init(critical, theta, policy)?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(t.record());
    for _ in 0..n_max {
        t = transform_step(&t)?;
        out.push(t.record());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::StarLaw;

    fn crit() -> ModelSpec {
        ModelSpec::new(2, StarLaw::constant(2).unwrap(), 0.2).unwrap()
    }

    #[test]
    fn init_examples() {
        let policy = TruncationPolicy::default();
        let one = transform_init(&crit(), 1.0, &policy).unwrap();
        assert_eq!(one.a_values(), one.companion().probs());
        let zero = transform_init(&crit(), 0.0, &policy).unwrap();
        assert!(zero.a_values().iter().all(|&v| v == 0.0));
        let half = transform_init(&crit(), 0.5, &policy).unwrap();
        let a = half.a_values();
        assert!((a[0] - 0.4).abs() < 1e-15 && a[1] == 0.0 && (a[2] - 0.1).abs() < 1e-15);
        assert!(transform_init(&crit(), 1.5, &policy).is_err());
    }

    #[test]
    fn half_theta_first_step() {
        let t = transform_init(&crit(), 0.5, &TruncationPolicy::default()).unwrap();
        let t1 = transform_step(&t).unwrap();
        assert!((t1.positive() - 0.09).abs() < 1e-15);
    }

    #[test]
    fn theta_one_reduces_to_the_law() {
        let mut t = transform_init(&crit(), 1.0, &TruncationPolicy::default()).unwrap();
        for _ in 0..200 {
            t = transform_step(&t).unwrap();
            assert!((t.positive() - survival(t.companion())).abs() <= 1e-10);
        }
    }

    #[test]
    fn domination_and_monotonicity_in_theta() {
        let policy = TruncationPolicy::default();
        let thetas = [0.0, 0.3, 0.7, 1.0];
        let mut ts: Vec<_> = thetas
            .iter()
            .map(|&th| transform_init(&crit(), th, &policy).unwrap())
            .collect();
        for _ in 0..100 {
            ts = ts.iter().map(|t| transform_step(t).unwrap()).collect();
            for w in ts.windows(2) {
                assert!(w[0].positive() <= w[1].positive() * (1.0 + 1e-12));
            }
            for t in &ts {
                assert!(t.domination_excess() <= 1e-9, "{}", t.domination_excess());
            }
        }
    }

    #[test]
    fn theta_zero_counts_open_paths() {
        // With theta = 0 the transform is P(N_n = 0, Y_n = y); a positive
        // Y_n forces an open path, and N_n = 0 exactly when all children
        // of the root carried nothing.
        let mut t = transform_init(&crit(), 0.0, &TruncationPolicy::default()).unwrap();
        for _ in 0..20 {
            let below = t.companion().effective_zero().powi(2);
            t = transform_step(&t).unwrap();
            assert_eq!(t.positive(), 0.0);
            assert!((t.open_probability() - (1.0 - below)).abs() < 1e-15);
            assert!(t.open_probability() >= survival(t.companion()) - 1e-15);
        }
    }
}
