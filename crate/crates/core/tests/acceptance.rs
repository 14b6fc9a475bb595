//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use drlab::analytics::{
    criticality_ceiling, default_kappa_window, delta_recursion_residual, exponent_fit,
    iterate_trace, iterate_trace_until, kappa_fit, loglog_slope, product_bound_check,
    strictly_increasing, KAPPA_FLOOR,
};
use drlab::dist::{ModelSpec, StarLaw, TruncationPolicy};
use drlab::open_paths::{
    coupling_check, deviation_probe, enumerate_definitional, fold_leaves, sample_rng,
    transform_mc_check, transform_trace, McSettings,
};
use rand_core::RngCore;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn two(p: f64) -> ModelSpec {
    ModelSpec::new(2, StarLaw::constant(2).unwrap(), p).unwrap()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn delta_recursion() -> Check {
    let trace = iterate_trace(&two(0.15), 200, &TruncationPolicy::weighted(1e-16))
        .map_err(|e| e.to_string())?;
    let r = delta_recursion_residual(&trace).map_err(|e| e.to_string())?;
    ensure(
        r.max_abs_residual <= 1e-9,
        format!("max residual {:.3e} (limit 1e-9)", r.max_abs_residual),
    )
}

fn manifold_preserved() -> Check {
    let trace =
        iterate_trace(&two(0.2), 100, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
    let max_delta = trace
        .records
        .iter()
        .fold(0.0f64, |a, r| a.max(r.delta.abs()));
    let c = criticality_ceiling(&trace);
    ensure(
        max_delta <= 1e-8 && c.sup_h <= 2.0 + 1e-9,
        format!("max |delta_n| {max_delta:.3e}, sup H_n(2) {:.12}", c.sup_h),
    )
}

fn critical_decay() -> Check {
    let spec = two(0.2);
    let policy = TruncationPolicy::default();
    let trace = iterate_trace(&spec, 2000, &policy).map_err(|e| e.to_string())?;
    let ns: Vec<f64> = (0..=2000).map(|n| n as f64).collect();
    let surv: Vec<f64> = trace.records.iter().map(|r| r.survival).collect();
    let open: Vec<f64> = transform_trace(&spec, 0.0, 1000, &policy)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| 1.0 - r.total)
        .collect();
    let w = (200, 1000);
    let slope = |ys: &[f64]| {
        loglog_slope(&ns[..ys.len()], ys, w)
            .map(|f| f.slope)
            .map_err(|e| e.to_string())
    };
    let slopes = [slope(&trace.means())?, slope(&surv)?, slope(&open)?];
    let spread = product_bound_check(&trace, Some((200, 2000)))
        .map_err(|e| e.to_string())?
        .ratio_spread()
        .unwrap_or(f64::INFINITY);
    ensure(
        slopes.iter().all(|s| (-2.6..=-1.5).contains(s)) && spread <= 3.0,
        format!(
            "slopes E(Y) {:.4}, P(Y>=1) {:.4}, P(N>=1) {:.4}; product spread {spread:.4}",
            slopes[0], slopes[1], slopes[2]
        ),
    )
}

fn decay_exponent() -> Check {
    let policy = TruncationPolicy::weighted(1e-280);
    let mut points = Vec::new();
    for eps in [0.04, 0.02, 0.01, 0.005] {
        let spec = ModelSpec::with_epsilon(2, StarLaw::constant(2).unwrap(), eps)
            .map_err(|e| e.to_string())?;
        let trace = iterate_trace_until(&spec, &policy, 20_000, |r| r.mean < KAPPA_FLOOR)
            .map_err(|e| e.to_string())?;
        let window = default_kappa_window(&trace.means(), eps).map_err(|e| e.to_string())?;
        points.push((
            eps,
            kappa_fit(&trace, window).map_err(|e| e.to_string())?.slope,
        ));
    }
    let slope = exponent_fit(&points).map_err(|e| e.to_string())?.slope;
    let kappas: Vec<String> = points.iter().map(|p| format!("{:.4}", p.1)).collect();
    ensure(
        (0.35..=0.70).contains(&slope) && strictly_increasing(&points),
        format!(
            "kappa_hat [{}] for eps [0.04 .. 0.005], slope {slope:.4}",
            kappas.join(", ")
        ),
    )
}

fn coupling() -> Check {
    let policy = TruncationPolicy::weighted(1e-280);
    let anchor = coupling_check(&two(0.1), 1, &policy).map_err(|e| e.to_string())?;
    let (lhs, rhs) = (anchor.rows[1].lhs, anchor.rows[1].rhs);
    let mut ok = (lhs - 0.19).abs() < 1e-15 && (rhs - 0.09).abs() < 1e-15;
    let mut mins = Vec::new();
    for p in [0.10, 0.15, 0.19] {
        let r = coupling_check(&two(p), 200, &policy).map_err(|e| e.to_string())?;
        ok &= r.holds;
        mins.push(format!("p={p}: {:.2e}", r.min_margin));
    }
    ensure(
        ok,
        format!("anchor {lhs} >= {rhs}; min margins {}", mins.join(", ")),
    )
}

fn oracle_equivalence() -> Check {
    let mut rng = sample_rng(6, 0);
    let mut trees = 0;
    for m in [2u32, 3] {
        for n in 0..=4u32 {
            for _ in 0..1000 {
                let leaves: Vec<u64> = (0..m.pow(n)).map(|_| rng.next_u64() % 4).collect();
                let fast = fold_leaves(m, n, &leaves).map_err(|e| e.to_string())?.n;
                let slow = enumerate_definitional(n, m, &leaves).map_err(|e| e.to_string())?;
                if fast != slow {
                    return Err(format!("m={m} n={n} leaves {leaves:?}: {fast} vs {slow}"));
                }
                trees += 1;
            }
        }
    }
    Ok(format!("{trees} trees agree"))
}

fn transform_validation() -> Check {
    let mc = McSettings {
        count: 100_000,
        seed: 7,
        ..McSettings::default()
    };
    let checks = transform_mc_check(
        &two(0.2),
        10,
        &[0.0, 0.5, 1.0],
        &mc,
        &TruncationPolicy::default(),
    )
    .map_err(|e| e.to_string())?;
    let zs: Vec<String> = checks
        .iter()
        .map(|c| format!("theta={}: {:.2}", c.theta, c.z))
        .collect();
    ensure(
        checks.iter().all(|c| c.z <= 4.0),
        format!("distance in standard errors: {}", zs.join(", ")),
    )
}

fn deviation_ceiling() -> Check {
    let mc = McSettings {
        count: 100_000,
        seed: 8,
        ..McSettings::default()
    };
    let r = deviation_probe(&two(0.2), 16, 4, &[], &mc, &TruncationPolicy::default())
        .map_err(|e| e.to_string())?;
    ensure(
        r.holds,
        format!(
            "estimate {:.3e} +- {:.1e}, ceiling {:.4e}",
            r.estimate.mean, r.estimate.std_error, r.ceiling
        ),
    )
}

/// Exact law of `X_n` for star uniform on 1..=5, m = 2, p = 1/10, as
/// numerators over `50^(2^n)`.
fn exact_uniform_star_laws(n_max: usize) -> Vec<(Vec<u128>, u128)> {
    let mut law: Vec<u128> = vec![45, 1, 1, 1, 1, 1];
    let mut den: u128 = 50;
    let mut out = vec![(law.clone(), den)];
    for _ in 0..n_max {
        let mut sq = vec![0u128; 2 * law.len() - 1];
        for (i, a) in law.iter().enumerate() {
            for (j, b) in law.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        den *= den;
        let mut next = vec![sq[0] + sq[1]];
        next.extend_from_slice(&sq[2..]);
        law = next;
        out.push((law.clone(), den));
    }
    out
}

fn mean_lower_bound() -> Check {
    let spec =
        ModelSpec::new(2, StarLaw::uniform(1, 5).unwrap(), 0.1).map_err(|e| e.to_string())?;
    let trace = iterate_trace(&spec, 4, &TruncationPolicy::default()).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut ok = true;
    for (n, (law, den)) in exact_uniform_star_laws(4).into_iter().enumerate() {
        let mean_num: u128 = law.iter().enumerate().map(|(k, c)| k as u128 * c).sum();
        // bound = (1/10) 2^n (5 - n)/5 = 2^n (5 - n) / 50
        let bound_num = (1u128 << n) * (5 - n as u128);
        ok &= mean_num * 50 >= bound_num * den;
        let exact = mean_num as f64 / den as f64;
        ok &= (trace.records[n].mean - exact).abs() <= 1e-12;
        rows.push(format!(
            "n={n}: {exact:.6} >= {:.2}",
            bound_num as f64 / 50.0
        ));
    }
    ensure(ok, rows.join(", "))
}

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != "run_info.json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        ("pc", "model.m = 2\nmodel.star = [[1, 0.5], [2, 0.5]]\nmodel.p = 0.2\n"),
        ("iterate", "model.m = 2\nmodel.star = [[2, 1.0]]\nmodel.p = 0.15\nrun.n_max = 300\n"),
        (
            "exponent-sweep",
            "model.m = 2\nmodel.star = [[2, 1.0]]\nmodel.epsilon = 0.04\nsweep.epsilons = [0.08, 0.04]\nfit.kappa_slope_band = [0.0, 1.0]\n",
        ),
        (
            "critical",
            "model.m = 2\nmodel.star = [[2, 1.0]]\nmodel.p = 0.2\ncritical.n_max = 400\ncritical.slope_window = [100, 400]\ncritical.product_window = [100, 400]\n",
        ),
        (
            "coupling",
            "model.m = 2\nmodel.star = [[2, 1.0]]\nmodel.p = 0.15\nrun.n_max = 60\ncoupling.mc_depth = 8\nmc.count = 5000\n",
        ),
        ("deviation", "model.m = 2\nmodel.star = [[2, 1.0]]\nmodel.p = 0.2\ndeviation.n = 12\ndeviation.j = 3\nmc.count = 5000\n"),
    ];
    for (command, text) in configs {
        let cfg = root.path().join(format!("{command}.toml"));
        std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
        let mut reference = None;
        for workers in [1, 4, 16] {
            for round in 0..2 {
                let out = root.path().join(format!("{command}-{workers}-{round}"));
                let status = Command::new(env!("CARGO_BIN_EXE_drlab"))
                    .arg(command)
                    .arg("--config")
                    .arg(&cfg)
                    .args(["--seed", "17", "--workers", &workers.to_string(), "--out"])
                    .arg(&out)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !status.status.success() {
                    return Err(format!("{command} exited with {:?}", status.status.code()));
                }
                let files = files_of(&out);
                match &reference {
                    None => reference = Some(files),
                    Some(r) if *r == files => {}
                    Some(_) => {
                        return Err(format!("{command}: outputs differ at {workers} workers"))
                    }
                }
            }
        }
    }
    Ok("six commands, 1/4/16 workers, two runs each: byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 delta recursion", delta_recursion),
        ("2 critical manifold", manifold_preserved),
        ("3 critical decay", critical_decay),
        ("4 decay exponent", decay_exponent),
        ("5 coupling inequality", coupling),
        ("6 oracle equivalence", oracle_equivalence),
        ("7 transform validation", transform_validation),
        ("8 deviation ceiling", deviation_ceiling),
        ("9 mean lower bound", mean_lower_bound),
        ("10 reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
