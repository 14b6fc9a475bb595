use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::output::{fmt_sig, Artifacts, Cell};
use super::CliError;
use crate::analytics::{
    criticality_ceiling, default_kappa_window, exponent_fit, iterate_trace, iterate_trace_until,
    kappa_fit, loglog_slope, product_bound_check, strictly_increasing, FitResult, IterationTrace,
    KAPPA_FLOOR,
};
use crate::open_paths::{
    coupling_check, deviation_probe, mc_estimate_vec, transform_trace, CoupledSampler,
};

/// Keys every `summary.json` carries, plus the command name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub p_c: f64,
    pub epsilon: Value,
    pub kappa_hat: Value,
    pub slope: Option<f64>,
    pub window: Value,
    pub pass: bool,
    pub margins: Value,
}

/// Truncation bookkeeping of one exact run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectSummary {
    pub label: String,
    pub generations: usize,
    pub final_defect: f64,
    pub max_support: usize,
}

impl DefectSummary {
    fn of(label: impl Into<String>, trace: &IterationTrace) -> Self {
        Self {
            label: label.into(),
            generations: trace.len() - 1,
            final_defect: trace.last().defect,
            max_support: trace.records.iter().map(|r| r.support).max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledFit {
    pub label: String,
    pub fit: FitResult,
}

fn labeled(label: &str, fit: FitResult) -> LabeledFit {
    LabeledFit {
        label: label.to_string(),
        fit,
    }
}

/// What a command hands back for the manifest and the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub fits: Vec<LabeledFit>,
    pub defects: Vec<DefectSummary>,
    pub lines: Vec<String>,
}

/// Distance inside a closed band; negative when outside.
fn band_margin(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo).min(hi - v)
}

fn summary(command: &'static str, p_c: f64) -> Summary {
    Summary {
        command,
        p_c,
        epsilon: Value::Null,
        kappa_hat: Value::Null,
        slope: None,
        window: Value::Null,
        pass: true,
        margins: Value::Null,
    }
}

pub fn pc(cfg: &ExperimentConfig, _out: &mut Artifacts) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let mut s = summary("pc", spec.p_c());
    s.epsilon = json!(spec.epsilon());
    Ok(Outcome {
        lines: vec![
            format!("p_c = {}", fmt_sig(spec.p_c(), 15)),
            format!("epsilon = {}", fmt_sig(spec.epsilon(), 15)),
        ],
        summary: s,
        fits: Vec::new(),
        defects: Vec::new(),
    })
}

pub fn iterate(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let trace = iterate_trace(&spec, cfg.run.n_max, &cfg.policy())?;
    out.trace("trace", &trace)?;
    let mut s = summary("iterate", spec.p_c());
    s.epsilon = json!(spec.epsilon());
    Ok(Outcome {
        lines: vec![format!(
            "{} generations, final mean {}, final defect {}",
            cfg.run.n_max,
            fmt_sig(trace.last().mean, 6),
            fmt_sig(trace.last().defect, 3)
        )],
        summary: s,
        fits: Vec::new(),
        defects: vec![DefectSummary::of("trace", &trace)],
    })
}

/// Result of one ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub generations: usize,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

pub fn exponent_sweep(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let star = cfg.star()?;
    let mut epsilons = cfg.sweep.epsilons.clone();
    epsilons.sort_by(|a, b| a.total_cmp(b));
    epsilons.dedup();
    if epsilons.len() < 2 {
        return Err(CliError::Config(format!(
            "need ≥ 2 points for the exponent fit, sweep.epsilons has {}",
            epsilons.len()
        )));
    }
    let policy = cfg.sweep_policy();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.mc.workers)
        .build()
        .map_err(|e| CliError::Failed(format!("thread pool: {e}")))?;
    let runs: Vec<(f64, Result<IterationTrace, CliError>)> = pool.install(|| {
        epsilons
            .par_iter()
            .map(|&eps| {
                let run = crate::dist::ModelSpec::with_epsilon(cfg.model.m, star.clone(), eps)
                    .and_then(|spec| {
                        iterate_trace_until(&spec, &policy, cfg.sweep.n_cap, |r| {
                            r.mean < KAPPA_FLOOR
                        })
                    })
                    .map_err(CliError::from);
                (eps, run)
            })
            .collect()
    });

    let mut points = Vec::new();
    let mut table = Vec::new();
    let mut defects = Vec::new();
    let mut fits = Vec::new();
    let mut lines = Vec::new();
    let mut p_c = f64::NAN;
    for (eps, run) in runs {
        let point = match run {
            Ok(trace) => {
                p_c = trace.spec.p_c();
                out.trace(&format!("trace_eps_{eps:?}"), &trace)?;
                defects.push(DefectSummary::of(format!("eps={eps:?}"), &trace));
                let window = match cfg.fit.window {
                    Some(w) => Ok(w),
                    None => default_kappa_window(&trace.means(), eps),
                };
                match window.and_then(|w| kappa_fit(&trace, w)) {
                    Ok(fit) => SweepPoint {
                        epsilon: eps,
                        generations: trace.len() - 1,
                        fit: Some(fit),
                        error: None,
                    },
                    Err(e) => SweepPoint {
                        epsilon: eps,
                        generations: trace.len() - 1,
                        fit: None,
                        error: Some(e.to_string()),
                    },
                }
            }
            Err(e) => SweepPoint {
                epsilon: eps,
                generations: 0,
                fit: None,
                error: Some(e.to_string()),
            },
        };
        match (&point.fit, &point.error) {
            (Some(fit), _) => {
                points.push((eps, fit.slope));
                fits.push(labeled(&format!("kappa eps={eps:?}"), *fit));
                table.push(vec![
                    Cell::Real(eps),
                    Cell::Real(fit.slope),
                    Cell::Int(fit.window.0 as u64),
                    Cell::Int(fit.window.1 as u64),
                    Cell::Real(fit.max_residual),
                ]);
                lines.push(format!("eps {eps:?}: kappa_hat {}", fmt_sig(fit.slope, 6)));
            }
            (None, Some(err)) => lines.push(format!("eps {eps:?}: skipped ({err})")),
            (None, None) => {}
        }
    }
    out.table(
        "sweep",
        &[
            "epsilon",
            "kappa_hat",
            "window_lo",
            "window_hi",
            "max_residual",
        ],
        &table,
    )?;
    let exponent = exponent_fit(&points)?;
    fits.push(labeled("log kappa vs log eps", exponent));
    let monotone = strictly_increasing(&points);
    let band = cfg.fit.kappa_slope_band;
    let in_band = band_margin(exponent.slope, band) >= 0.0;
    lines.push(format!(
        "slope {} (band [{}, {}]), kappa increasing in eps: {monotone}",
        fmt_sig(exponent.slope, 6),
        band.0,
        band.1
    ));

    let mut s = summary("exponent-sweep", p_c);
    s.epsilon = json!(points.iter().map(|p| p.0).collect::<Vec<_>>());
    s.kappa_hat = json!(points.iter().map(|p| p.1).collect::<Vec<_>>());
    s.slope = Some(exponent.slope);
    s.window = json!(fits
        .iter()
        .filter(|f| f.label.starts_with("kappa"))
        .map(|f| f.fit.window)
        .collect::<Vec<_>>());
    s.pass = in_band && monotone && points.len() == epsilons.len();
    s.margins = json!({ "slope_band": band_margin(exponent.slope, band) });
    Ok(Outcome {
        summary: s,
        fits,
        defects,
        lines,
    })
}

pub fn critical(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let c = &cfg.critical;
    if c.slope_window.1 > c.n_max || c.product_window.1 > c.n_max {
        return Err(CliError::Config(format!(
            "critical.n_max = {} is shorter than the requested windows",
            c.n_max
        )));
    }
    let spec = cfg.spec()?.at_criticality();
    let policy = cfg.policy();
    let trace = iterate_trace(&spec, c.n_max, &policy)?;
    out.trace("trace", &trace)?;

    let horizon = c.delta_horizon.min(c.n_max);
    let max_delta = trace.records[..=horizon]
        .iter()
        .fold(0.0f64, |a, r| a.max(r.delta.abs()));
    let ceiling = criticality_ceiling(&trace);
    let product = product_bound_check(&trace, Some(c.product_window))?;
    let spread = product.ratio_spread().unwrap_or(f64::INFINITY);

    let open = transform_trace(&spec, 0.0, c.slope_window.1, &policy)?;
    let p_open: Vec<f64> = open.iter().map(|r| 1.0 - r.total).collect();
    out.table(
        "open_paths",
        &["n", "p_open"],
        &p_open
            .iter()
            .enumerate()
            .map(|(n, &v)| vec![Cell::Int(n as u64), Cell::Real(v)])
            .collect::<Vec<_>>(),
    )?;

    let ns: Vec<f64> = (0..trace.len()).map(|n| n as f64).collect();
    let means = trace.means();
    let surv: Vec<f64> = trace.records.iter().map(|r| r.survival).collect();
    let w = c.slope_window;
    let mean_fit = loglog_slope(&ns, &means, w)?;
    let surv_fit = loglog_slope(&ns, &surv, w)?;
    let open_fit = loglog_slope(&ns[..p_open.len()], &p_open, w)?;
    let band = cfg.fit.decay_band;

    let margins = json!({
        "delta": c.delta_tol - max_delta,
        "sup_h": ceiling.ceiling + 1e-9 - ceiling.sup_h,
        "product_spread": cfg.fit.spread_max - spread,
        "mean_slope": band_margin(mean_fit.slope, band),
        "survival_slope": band_margin(surv_fit.slope, band),
        "open_slope": band_margin(open_fit.slope, band),
    });
    let pass = margins
        .as_object()
        .expect("object literal")
        .values()
        .all(|v| v.as_f64().is_some_and(|x| x >= 0.0));

    out.json(
        "critical.json",
        &json!({
            "max_abs_delta": max_delta,
            "delta_horizon": horizon,
            "ceiling": ceiling,
            "product": {
                "window": product.window,
                "ratio_min": product.ratio_min,
                "ratio_max": product.ratio_max,
                "spread": spread,
            },
        }),
    )?;
    let lines = vec![
        format!(
            "max |delta_n| for n <= {horizon}: {}",
            fmt_sig(max_delta, 3)
        ),
        format!(
            "sup H_n(m) = {} (ceiling {})",
            fmt_sig(ceiling.sup_h, 12),
            fmt_sig(ceiling.ceiling, 12)
        ),
        format!(
            "product / n^2 spread over {:?}: {}",
            c.product_window,
            fmt_sig(spread, 4)
        ),
        format!(
            "log-log slopes over {w:?}: mean {}, survival {}, open paths {}",
            fmt_sig(mean_fit.slope, 4),
            fmt_sig(surv_fit.slope, 4),
            fmt_sig(open_fit.slope, 4)
        ),
    ];
    let mut s = summary("critical", spec.p_c());
    s.epsilon = json!(0.0);
    s.slope = Some(mean_fit.slope);
    s.window = json!(w);
    s.pass = pass;
    s.margins = margins;
    Ok(Outcome {
        summary: s,
        fits: vec![
            labeled("mean", mean_fit),
            labeled("survival", surv_fit),
            labeled("open paths", open_fit),
        ],
        defects: vec![DefectSummary::of("critical", &trace)],
        lines,
    })
}

pub fn coupling(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let n_max = cfg.run.n_max;
    let report = coupling_check(&spec, n_max, &cfg.coupling_policy())?;
    let rows: Vec<Vec<Cell>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.n as u64),
                Cell::Real(r.lhs),
                Cell::Real(r.rhs),
                Cell::Real(r.margin),
                Cell::Real(r.lhs_allowance),
                Cell::Real(r.rhs_allowance),
            ]
        })
        .collect();
    out.table(
        "coupling",
        &[
            "n",
            "lhs",
            "rhs",
            "margin",
            "lhs_allowance",
            "rhs_allowance",
        ],
        &rows,
    )?;
    let mut pass = report.holds;
    let mut lines = vec![format!(
        "theta = {}, min margin {} over n <= {n_max}, holds: {}",
        fmt_sig(report.theta, 12),
        fmt_sig(report.min_margin, 6),
        report.holds
    )];
    let mut margins = json!({
        "min_margin": report.min_margin,
        "final_margin": report.rows.last().map(|r| r.margin),
    });

    if let Some(depth) = cfg.coupling.mc_depth {
        let row = report.rows.get(depth as usize).ok_or_else(|| {
            CliError::Config(format!(
                "coupling.mc_depth = {depth} exceeds run.n_max = {n_max}"
            ))
        })?;
        let mc = cfg.mc_settings();
        let sampler = CoupledSampler::new(&spec, depth, mc.node_budget)?;
        let theta = report.theta;
        let est = mc_estimate_vec(2, mc.count, mc.seed, mc.workers, |rng, o| {
            let s = sampler.sample(rng);
            o[0] = f64::from(u8::from(s.x >= 1));
            o[1] = if s.y >= 1 {
                theta.powf(s.n as f64)
            } else {
                0.0
            };
            Ok(())
        })?;
        let z = |e: &crate::open_paths::McEstimate, exact: f64| {
            if e.std_error > 0.0 {
                (e.mean - exact).abs() / e.std_error
            } else if e.mean == exact {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let (z_lhs, z_rhs) = (z(&est[0], row.lhs), z(&est[1], row.rhs));
        pass &= z_lhs <= 4.0 && z_rhs <= 4.0;
        out.json(
            "coupling_mc.json",
            &json!({
                "depth": depth,
                "lhs_exact": row.lhs,
                "lhs_estimate": est[0],
                "lhs_z": z_lhs,
                "rhs_exact": row.rhs,
                "rhs_estimate": est[1],
                "rhs_z": z_rhs,
            }),
        )?;
        margins["mc_lhs_z"] = json!(4.0 - z_lhs);
        margins["mc_rhs_z"] = json!(4.0 - z_rhs);
        lines.push(format!(
            "sampled at n = {depth}: lhs {} (z {}), rhs {} (z {})",
            fmt_sig(est[0].mean, 6),
            fmt_sig(z_lhs, 3),
            fmt_sig(est[1].mean, 6),
            fmt_sig(z_rhs, 3)
        ));
    }
    let mut s = summary("coupling", spec.p_c());
    s.epsilon = json!(spec.epsilon());
    s.window = json!([0, n_max]);
    s.pass = pass;
    s.margins = margins;
    Ok(Outcome {
        summary: s,
        fits: Vec::new(),
        defects: Vec::new(),
        lines,
    })
}

pub fn deviation(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?.at_criticality();
    let d = &cfg.deviation;
    let report = deviation_probe(
        &spec,
        d.n,
        d.j,
        &cfg.alphas(),
        &cfg.mc_settings(),
        &cfg.policy(),
    )?;
    out.json("deviation.json", &report)?;
    let mut lines = vec![format!(
        "P(Y_{n} >= {}, 1 <= N_{n} <= {}) ~ {} +- {}; ceiling {}",
        report.y_threshold,
        report.open_cap,
        fmt_sig(report.estimate.mean, 6),
        fmt_sig(report.estimate.std_error, 3),
        fmt_sig(report.ceiling, 6),
        n = d.n
    )];
    for row in &report.small_deviation {
        lines.push(format!(
            "P(N_{n} <= {} | Y_{n} >= 1) ~ {}",
            row.alpha,
            fmt_sig(row.conditional, 6),
            n = d.n
        ));
    }
    let mut s = summary("deviation", spec.p_c());
    s.epsilon = json!(0.0);
    s.pass = report.holds;
    s.margins = json!({ "ceiling": report.ceiling - report.estimate.mean });
    Ok(Outcome {
        summary: s,
        fits: Vec::new(),
        defects: Vec::new(),
        lines,
    })
}
