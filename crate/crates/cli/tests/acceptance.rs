//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use ldgap_cli::phase::run_phase;
use ldgap_cli::verify::{run_verify, Level, VerifyReport};
use ldgap_cli::ExperimentConfig;
use ldgap_core::estimators::{
    bikmeans, cluster_project_hc, omega_min_column_signal, sparse_two_step, spectral_project, BiMode, EstimatorConfig,
};
use ldgap_core::ldbounds::{
    empirical_lowdeg_mmse, mmse_formula, mmse_lower_bound, sw_correlation_sum, threshold_point, variance_x,
};
use ldgap_core::metrics::{check_loss_inequality, clustering_error, mtog_sides, partnership_distance, separation_of};
use ldgap_core::model::sample_prior;
use ldgap_core::rng::{derive_seed, gaussian, rng_from_seed};
use ldgap_core::{DMatrix, ModelSpec, Partition};
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = (bool, String);

fn families(report: &VerifyReport, prefix: &str) -> Outcome {
    let fam = report.family(prefix);
    let checked: usize = fam.iter().map(|c| c.checked).sum();
    match fam.iter().find(|c| !c.passed) {
        Some(bad) => (false, format!("{}: {}", bad.id, bad.detail)),
        None => (
            !fam.is_empty(),
            format!("{checked} identities over {} families", fam.len()),
        ),
    }
}

fn criterion_1(full: &VerifyReport) -> Outcome {
    families(full, "oracle/")
}

fn criterion_2(full: &VerifyReport) -> Outcome {
    let (ok_n, msg_n) = families(full, "nullity/");
    let (ok_v, msg_v) = families(full, "nonvacuity/");
    let detail: Vec<String> = full
        .family("nonvacuity/")
        .iter()
        .map(|c| format!("{} {}", c.id, c.detail))
        .collect();
    (
        ok_n && ok_v,
        format!("soundness {msg_n}; non-vacuity {msg_v} [{}]", detail.join("; ")),
    )
}

fn criterion_3(full: &VerifyReport) -> Outcome {
    families(full, "bound/")
}

fn criterion_4(full: &VerifyReport) -> Outcome {
    families(full, "counting/")
}

fn criterion_5() -> Outcome {
    const SAMPLES: usize = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for (li, lambda2) in [0.25, 1.0, 4.0].into_iter().enumerate() {
        let spec = ModelSpec::clustering(3, 2, 2).with_lambda2(lambda2);
        for d in [1u32, 2] {
            let sw = match sw_correlation_sum(&spec, d) {
                Ok(s) => s.value,
                Err(e) => return (false, format!("λ²={lambda2} D={d}: {e}")),
            };
            let seed = derive_seed(0xACCE_5005, (li as u64) << 4 | u64::from(d));
            let emp = match empirical_lowdeg_mmse(&spec, d, SAMPLES, SAMPLES, seed) {
                Ok(e) => e,
                Err(e) => return (false, format!("λ²={lambda2} D={d}: {e}")),
            };
            let var = variance_x(2);
            let slack = emp.mse + 3.0 * emp.std_error;
            // E[x²] = 1/K; the α = 0 term of the sum already carries (1/K)²
            let holds = var - sw <= slack && 0.5 - sw <= slack;
            ok &= holds;
            parts.push(format!(
                "λ²={lambda2} D={d}: var−sw={:.5} 1/K−sw={:.5} ≤ mse+3se={:.5}",
                var - sw,
                0.5 - sw,
                slack
            ));
        }
    }
    (ok, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let k10 = mmse_formula(10, 0.01).unwrap_or(f64::NAN);
    let fixture = (k10 - 0.08986).abs() <= 1e-5;
    let zero = mmse_formula(10, 0.0) == Some(0.1 - 0.01) && mmse_formula(3, 0.0) == Some(variance_x(3));
    // K = 2 vacuity point by bisection on the raw formula
    let (mut lo, mut hi) = (0.0f64, 0.9f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mmse_formula(2, mid).unwrap_or(-1.0) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let vacuity = (0.17..0.19).contains(&lo);
    // ζ placed just above and below the vacuity point through Δ̄⁴·n/(K²p)
    let p = 1usize << 20;
    let at = |zeta: f64| ModelSpec::clustering(4, p, 2).with_delta_bar2((zeta * p as f64).sqrt());
    let above = mmse_lower_bound(&at(lo + 0.01), 1);
    let below = mmse_lower_bound(&at(lo - 0.01), 1);
    let flags = match (above, below) {
        (Ok(a), Ok(b)) => a.flags.clamped && a.mmse_lower == 0.0 && !b.flags.clamped && b.mmse_lower > 0.0,
        _ => false,
    };
    (
        fixture && zero && vacuity && flags,
        format!("K=10,ζ=0.01 → {k10:.7}; ζ=0 exact: {zero}; K=2 vacuity point ζ≈{lo:.4}; clamp flag: {flags}"),
    )
}

fn recovery_config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_text(text, &[]).expect("acceptance config parses")
}

/// Planted sparse instance: K = 2 groups, means ±a on exactly s columns.
fn planted_sparse(n: usize, p: usize, s: usize, a: f64, seed: u64) -> (DMatrix<f64>, Partition, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let labels = loop {
        let l: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        if l.contains(&0) && l.contains(&1) {
            break l;
        }
    };
    let mut cols: Vec<usize> = (0..p).collect();
    cols.shuffle(&mut rng);
    let mut active = cols[..s].to_vec();
    active.sort_unstable();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let sign = if labels[i] == 0 { a } else { -a };
        for &j in &active {
            x[(i, j)] = sign;
        }
    }
    let part = Partition::from_labels(labels, 2).expect("two labels");
    (x, part, active)
}

fn chance_err(est: &Partition, truth: &Partition, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let reps = 20;
    let mut total = 0.0;
    for _ in 0..reps {
        let mut labels = est.labels().to_vec();
        labels.shuffle(&mut rng);
        let shuffled = Partition::from_labels(labels, est.k()).expect("same label range");
        total += clustering_error(&shuffled, truth).unwrap_or(f64::NAN);
    }
    total / reps as f64
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;

    // dense clustering through the phase harness
    let (n, p, k) = (200.0f64, 50.0f64, 3.0f64);
    let delta2 = 100.0 * (n.ln() + (p * k * k * n.ln() / n).sqrt());
    let t0 = Instant::now();
    let cfg = recovery_config(&format!(
        "model = clustering\nn = 200\np = 50\nk = 3\ndelta2 = {delta2}\ntrials = 100\nestimator = project_hc\nseed = 70\n"
    ));
    match run_phase(&cfg) {
        Ok(recs) if recs[0].error.is_none() => {
            let r = &recs[0].row;
            let pass = r.exact_recovery_rate >= 0.9;
            ok &= pass;
            parts.push(format!(
                "hc Δ̄²={delta2:.1} (realized {:.1}) exact={:.2} in {:.1}s",
                r.delta2_realized_mean,
                r.exact_recovery_rate,
                t0.elapsed().as_secs_f64()
            ));
        }
        Ok(recs) => return (false, format!("hc: {:?}", recs[0].error)),
        Err(e) => return (false, format!("hc: {e}")),
    }

    // sparse two-step on a homogeneous planted instance
    let (n, p, s) = (200usize, 400usize, 10usize);
    // column detection level √(n log np) + log p
    let omega_th = ((n as f64) * ((n * p) as f64).ln()).sqrt() + (p as f64).ln();
    let comp_th = {
        let spec = ModelSpec::sparse(n, p, 2, Rational64::new(s as i64, p as i64));
        threshold_point(&spec).computational
    };
    // ω² = n·a², Δ² = 2·s·a² with σ² = 1
    let a2 = (100.0 * omega_th / n as f64).max(100.0 * comp_th / (2.0 * s as f64));
    let t0 = Instant::now();
    let mut exact = 0;
    let mut min_ratio = (f64::INFINITY, f64::INFINITY);
    for t in 0..100u64 {
        let seed = derive_seed(0x5A5E, t);
        let (x, truth, active) = planted_sparse(n, p, s, a2.sqrt(), seed);
        let mut rng = rng_from_seed(derive_seed(seed, 7));
        let y = DMatrix::from_fn(n, p, |i, j| x[(i, j)] + gaussian(&mut rng));
        let d2 = separation_of(&x, &truth, 1.0).unwrap_or(f64::NAN);
        let om2 = omega_min_column_signal(&x, &active, 1.0).unwrap_or(f64::NAN);
        min_ratio = (min_ratio.0.min(d2 / comp_th), min_ratio.1.min(om2 / omega_th));
        let cfg = EstimatorConfig::new(2).with_s(s).with_seed(derive_seed(seed, 1));
        if let Ok((est, _)) = sparse_two_step(&y, 2, &cfg) {
            if clustering_error(&est.rows, &truth).unwrap_or(1.0) == 0.0 {
                exact += 1;
            }
        }
    }
    let pass = exact >= 90 && min_ratio.0 >= 100.0 && min_ratio.1 >= 100.0;
    ok &= pass;
    parts.push(format!(
        "sparse exact={exact}/100 (Δ²/th ≥ {:.0}, ω²/th ≥ {:.0}) in {:.1}s",
        min_ratio.0,
        min_ratio.1,
        t0.elapsed().as_secs_f64()
    ));

    // λ = 0: err against the estimator's own output with labels shuffled
    let spec = ModelSpec::clustering(200, 50, 3);
    let mut errs = Vec::new();
    let mut base = Vec::new();
    for t in 0..100u64 {
        let seed = derive_seed(0x0C4A, t);
        let Ok((_, obs, truth)) = sample_prior(&spec, seed) else {
            return (false, "λ=0 sampling failed".into());
        };
        let cfg = EstimatorConfig::new(3).with_seed(derive_seed(seed, 1));
        match cluster_project_hc(&obs.y, 3, &cfg) {
            Ok(est) => {
                errs.push(clustering_error(&est.rows, &truth.rows).unwrap_or(f64::NAN));
                base.push(chance_err(&est.rows, &truth.rows, derive_seed(seed, 2)));
            }
            Err(e) => return (false, format!("λ=0: {e}")),
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (me, mb) = (mean(&errs), mean(&base));
    let pass = ((me - mb) / mb).abs() <= 0.10;
    ok &= pass;
    parts.push(format!("λ=0 mean err {me:.4} vs chance {mb:.4}"));
    (ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let (n, p, k) = (400usize, 100usize, 2usize);
    // Δ⁴ = 100·pK²/n
    let delta2 = (100.0 * (p * k * k) as f64 / n as f64).sqrt();
    let spec = ModelSpec::clustering(n, p, k).with_delta_bar2(delta2);
    let mut good = 0;
    let mut worst = f64::INFINITY;
    for t in 0..200u64 {
        let seed = derive_seed(0x9F01, t);
        let Ok((state, obs, _)) = sample_prior(&spec, seed) else {
            return (false, "sampling failed".into());
        };
        let mut rng = rng_from_seed(derive_seed(seed, 1));
        let (mut i1, mut i2) = (Vec::new(), Vec::new());
        for i in 0..n {
            if rng.random_bool(0.5) {
                i2.push(i);
            } else {
                i1.push(i);
            }
        }
        let y1 = obs.y.select_rows(i1.iter());
        let y2 = obs.y.select_rows(i2.iter());
        let proj = match spectral_project(&y1, &y2, k) {
            Ok(pr) => pr,
            Err(e) => return (false, e.to_string()),
        };
        let mut ratio = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                let diff = (state.nu.row(a) - state.nu.row(b)).transpose();
                let kept = proj.basis.tr_mul(&diff).norm_squared();
                ratio = ratio.min(kept / diff.norm_squared());
            }
        }
        worst = worst.min(ratio);
        if ratio >= 0.25 {
            good += 1;
        }
    }
    (
        good >= 180,
        format!("{good}/200 trials keep ≥ 1/4 of every center gap (worst ratio {worst:.3})"),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = rng_from_seed(0x9A27);
    let mut fails = 0;
    let mut pairs = 0;
    while pairs < 1000 {
        let k = rng.random_range(2..=4usize);
        let n = rng.random_range(k.max(2)..=12usize);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let (Ok(a), Ok(b)) = (Partition::from_labels(a, k), Partition::from_labels(b, k)) else {
            continue;
        };
        if a.nonempty_groups() < k || b.nonempty_groups() < k {
            continue;
        }
        pairs += 1;
        let mtog = mtog_sides(&a, &b).map(|(l, r)| l <= r).unwrap_or(false);
        let loss = check_loss_inequality(&a, &b).map(|c| c.holds).unwrap_or(false);
        if !(mtog && loss) {
            fails += 1;
        }
    }
    let star = Partition::from_labels(vec![0, 0, 1, 1], 2).expect("valid");
    let hat = Partition::from_labels(vec![0, 1, 0, 1], 2).expect("valid");
    let hand = clustering_error(&hat, &star).ok() == Some(0.5) && partnership_distance(&hat, &star).ok() == Some(8);
    (
        fails == 0 && hand,
        format!("{fails} failures in {pairs} pairs; n=4 example err=1/2, ‖ΔM‖²=8: {hand}"),
    )
}

fn criterion_10() -> Outcome {
    let (n, p) = (8usize, 8usize);
    // checkerboard ±a: Δ_r² = 2pa², Δ_c² = 2na²
    let a = (1e4 / (2.0 * p as f64)).sqrt();
    let mut exact = 0;
    for t in 0..50u64 {
        let mut rng = rng_from_seed(derive_seed(0xB1C0, t));
        let mut two_groups = |m: usize| loop {
            let l: Vec<usize> = (0..m).map(|_| rng.random_range(0..2)).collect();
            if l.contains(&0) && l.contains(&1) {
                break l;
            }
        };
        let rows = two_groups(n);
        let cols = two_groups(p);
        let y = DMatrix::from_fn(n, p, |i, j| {
            let sign = if rows[i] == cols[j] { a } else { -a };
            sign + gaussian(&mut rng)
        });
        let truth_r = Partition::from_labels(rows, 2).expect("valid");
        let truth_c = Partition::from_labels(cols, 2).expect("valid");
        let cfg = EstimatorConfig::new(2).with_l(2).with_seed(t);
        let Ok(res) = bikmeans(&y, 2, 2, BiMode::Exhaustive, &cfg) else {
            continue;
        };
        let cols_hat = res.partition.cols.as_ref();
        let ok_r = clustering_error(&res.partition.rows, &truth_r).ok() == Some(0.0);
        let ok_c = cols_hat.and_then(|c| clustering_error(c, &truth_c).ok()) == Some(0.0);
        if ok_r && ok_c {
            exact += 1;
        }
    }
    (
        exact == 50,
        format!("{exact}/50 checkerboards recovered in rows and columns"),
    )
}

fn criterion_11() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, e.to_string()),
    };
    let config = dir.path().join("phase.cfg");
    let text = "model = clustering\nn = 40\np = 20\nk = 2\ndelta2 = 1, 10, 100\ntrials = 8\nseed = 11\n";
    if let Err(e) = std::fs::write(&config, text) {
        return (false, e.to_string());
    }
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_ldgap"))
            .args(["phase", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status();
        match status {
            Ok(s) if s.success() => {}
            other => return (false, format!("run {run}: {other:?}")),
        }
        outputs.push(std::fs::read(&out).unwrap_or_default());
    }
    let same = !outputs[0].is_empty() && outputs[0] == outputs[1];
    (
        same,
        format!("two runs, {} bytes each, identical: {same}", outputs[0].len()),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let full = match run_verify(Level::Full, None) {
        Ok(r) => r,
        Err(e) => {
            println!("verify failed to run: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("full verify grid ran in {:.1}s", start.elapsed().as_secs_f64());

    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(|| criterion_1(&full))),
        (2, Box::new(|| criterion_2(&full))),
        (3, Box::new(|| criterion_3(&full))),
        (4, Box::new(|| criterion_4(&full))),
        (5, Box::new(criterion_5)),
        (6, Box::new(criterion_6)),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
        (10, Box::new(criterion_10)),
        (11, Box::new(criterion_11)),
    ];
    let mut all = true;
    for (id, f) in criteria {
        let t = Instant::now();
        let (ok, detail) = f();
        all &= ok;
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id}: {tag} ({:.1}s) {detail}", t.elapsed().as_secs_f64());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
