//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wristsign::auth::weights_from_auc;
use wristsign::baseline::{dft, lasso_fit, ridge_fit, soft_threshold, Matrix};
use wristsign::dataset::{generate, write_dataset, Dataset, SynthConfig};
use wristsign::dsp::{sg_coefficients, sg_smooth};
use wristsign::eval::{auc, discrimination, roc_curve};
use wristsign::experiment::{run_baseline, run_evaluation, BaselineConfig, EvalConfig, EvalReport};
use wristsign::profile::poisson_rank_weights;
use wristsign::signal::Channel;
use wristsign::{dtw_distance, TrainOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Exhaustive minimum over every monotone (0,1)/(1,0)/(1,1) path.
fn brute_force_cost(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
    let d = a[i] - b[j];
    let here = d * d;
    if i + 1 == a.len() && j + 1 == b.len() {
        return here;
    }
    let mut best = f64::INFINITY;
    if i + 1 < a.len() {
        best = best.min(brute_force_cost(a, b, i + 1, j));
    }
    if j + 1 < b.len() {
        best = best.min(brute_force_cost(a, b, i, j + 1));
    }
    if i + 1 < a.len() && j + 1 < b.len() {
        best = best.min(brute_force_cost(a, b, i + 1, j + 1));
    }
    here + best
}

fn dtw_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..500 {
        let mut series = || -> Vec<f64> {
            let n = rng.random_range(1..=8);
            (0..n).map(|_| f64::from(rng.random_range(-3i32..=3))).collect()
        };
        let (a, b) = (series(), series());
        let expected = brute_force_cost(&a, &b, 0, 0).sqrt();
        if dtw_distance(&a, &b).unwrap() != expected {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("500 pairs, {mismatches} mismatches, {elapsed:.2?} (limit 10s)"),
    )
}

fn sg_exactness() -> Outcome {
    let expected = [-21.0, 14.0, 39.0, 54.0, 59.0, 54.0, 39.0, 14.0, -21.0];
    let kernel = sg_coefficients(9, 2).unwrap();
    let coef_err = kernel
        .weights()
        .iter()
        .zip(expected)
        .map(|(w, p)| (w - p / 231.0).abs())
        .fold(0.0, f64::max);
    let mut fixed_err: f64 = 0.0;
    for n in 9..40 {
        for (c0, c1) in [(5.0, 0.0), (-2.5, 0.0), (3.0, 0.7), (-100.0, 12.25), (0.0, -1e-3)] {
            let x: Vec<f64> = (0..n).map(|i| c0 + c1 * i as f64).collect();
            let y = sg_smooth(&Channel::new(x.clone()), 9, 2).unwrap();
            for (a, b) in x.iter().zip(y.values()) {
                fixed_err = fixed_err.max((a - b).abs());
            }
        }
    }
    outcome(
        coef_err <= 1e-12 && fixed_err <= 1e-9,
        format!("kernel error {coef_err:.1e} (tol 1e-12), affine fixed-point error {fixed_err:.1e} (tol 1e-9)"),
    )
}

fn poisson_weights() -> Outcome {
    let mut sum_err: f64 = 0.0;
    for n in 2..=50 {
        let rho = poisson_rank_weights(n).unwrap();
        sum_err = sum_err.max((rho.iter().sum::<f64>() - 1.0).abs());
    }
    let mut worst_tail: f64 = 0.0;
    for n in 5..=50 {
        let rho = poisson_rank_weights(n).unwrap();
        worst_tail = worst_tail.max(rho[n.div_ceil(2)..].iter().sum());
    }
    let derived = [0.58252, 0.29126, 0.09709, 0.02427, 0.00485];
    let r5 = poisson_rank_weights(5).unwrap();
    let vec_err = r5
        .iter()
        .zip(derived)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        sum_err <= 1e-12 && worst_tail < 0.05 && vec_err <= 1e-5,
        format!("sum error {sum_err:.1e}, worst tail mass {worst_tail:.4} (< 0.05), n=5 error {vec_err:.1e}"),
    )
}

fn calibration_reproduction() -> Outcome {
    let a = [0.8556, 0.9130, 0.9985, 0.9839, 0.9851, 0.8682];
    let expected = [0.0111, 0.1249, 0.2945, 0.2655, 0.2679, 0.0361];
    let cal = weights_from_auc(&a);
    let err = cal
        .weights
        .as_array()
        .iter()
        .zip(expected)
        .map(|(m, p)| (m - p).abs())
        .fold(0.0, f64::max);
    outcome(
        err <= 5e-4 && !cal.uniform_fallback,
        format!("mu = {:.4?}, max error {err:.1e} (tol 5e-4)", cal.weights.as_array()),
    )
}

fn brute_force_auc(g: &[f64], i: &[f64]) -> f64 {
    let mut twice = 0u64;
    for a in g {
        for b in i {
            twice += match a.partial_cmp(b).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice as f64 / (2 * g.len() * i.len()) as f64
}

fn auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut mismatches, mut area_err) = (0, 0.0f64);
    for set in 0..200 {
        // Coarse grids on half the sets force ties.
        let levels = if set % 2 == 0 { 8 } else { 1 << 30 };
        let mut draw = |shift: f64| -> Vec<f64> {
            let n = rng.random_range(1..60);
            (0..n)
                .map(|_| (f64::from(rng.random_range(0..levels)) / f64::from(levels) + shift).min(1.0))
                .collect()
        };
        let g = draw(0.2);
        let i = draw(0.0);
        let a = auc(&g, &i).unwrap();
        if a != brute_force_auc(&g, &i) {
            mismatches += 1;
        }
        area_err = area_err.max((roc_curve(&g, &i).unwrap().area() - a).abs());
    }
    outcome(
        mismatches == 0 && area_err <= 1e-9,
        format!("200 sets, {mismatches} mismatches, max ROC area error {area_err:.1e} (tol 1e-9)"),
    )
}

fn end_to_end(dataset: &Dataset) -> Outcome {
    let start = Instant::now();
    let (report, _) = discrimination(&dataset.users, TrainOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let probes_ok = report
        .per_user
        .iter()
        .all(|u| u.genuine_probes == 10 && u.impostor_probes == 140);
    outcome(
        dataset.users.len() == 15
            && probes_ok
            && report.fnr <= 0.05
            && report.fpr <= 0.10
            && report.auc_total >= 0.95
            && elapsed < Duration::from_secs(60),
        format!(
            "15 users, FNR {:.4} (<= 0.05), FPR {:.4} (<= 0.10), AUC {:.4} (>= 0.95), {elapsed:.2?} (limit 60s)",
            report.fnr, report.fpr, report.auc_total
        ),
    )
}

fn attack_ladder(report: &EvalReport) -> Outcome {
    let attack = report.attack.as_ref().expect("default dataset has attacks");
    let medians: Vec<f64> = attack.scenarios.iter().map(|s| s.median_tss).collect();
    let strengths: Vec<f64> = attack.scenarios.iter().map(|s| s.strength.unwrap()).collect();
    let increasing = medians.windows(2).all(|w| w[0] < w[1]);
    let low_fpr: Vec<f64> = attack
        .scenarios
        .iter()
        .filter(|s| s.strength.unwrap() <= 0.5)
        .map(|s| s.accept_rate)
        .collect();
    outcome(
        strengths == [0.0, 0.5, 0.8] && attack.threshold == 0.65 && increasing && low_fpr.iter().all(|&f| f == 0.0),
        format!("medians {medians:.4?} at m = {strengths:?}, FPR at m <= 0.5 {low_fpr:?} (delta 0.65)"),
    )
}

fn fault_tolerance(report: &EvalReport) -> Outcome {
    let fault = report.fault_tolerance.as_ref().expect("default dataset has a fault sweep");
    let worst = fault.points.iter().map(|p| p.fnr).fold(0.0, f64::max);
    let max_fraction = fault.points.iter().map(|p| p.fraction).fold(0.0, f64::max);
    let clean = fault.points.iter().find(|p| p.fraction == 0.0);
    outcome(
        worst <= 0.05 && max_fraction >= 0.5 && clean.is_some_and(|p| p.tpr == 1.0),
        format!(
            "worst FNR {worst:.4} up to {max_fraction} bad (<= 0.05), TPR at 0% {:?}",
            clean.map(|p| p.tpr)
        ),
    )
}

fn regression_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<f64> = (0..30).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let lambda = 0.3;
    let beta = ridge_fit(&x, &y, lambda).unwrap();
    let (gram, xty) = x.gram(&y);
    let mut ridge_err: f64 = 0.0;
    for r in 0..6 {
        let lhs: f64 = (0..6).map(|c| gram[r * 6 + c] * beta[c]).sum::<f64>() + lambda * beta[r];
        ridge_err = ridge_err.max((lhs - xty[r]).abs());
    }

    // Orthonormal columns by Gram-Schmidt on a random 20x5 design.
    let (n, p) = (20, 5);
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < p {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= d * ui);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|a| a / norm).collect());
    }
    let design: Vec<Vec<f64>> = (0..n).map(|i| q.iter().map(|col| col[i]).collect()).collect();
    let xo = Matrix::from_rows(&design).unwrap();
    let yo: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut lasso_err: f64 = 0.0;
    for lam in [0.0, 0.1, 0.5, 1.0, 3.0] {
        let b = lasso_fit(&xo, &yo, lam).unwrap();
        for (j, col) in q.iter().enumerate() {
            let z: f64 = col.iter().zip(&yo).map(|(a, b)| a * b).sum();
            lasso_err = lasso_err.max((b[j] - soft_threshold(z, lam / 2.0)).abs());
        }
    }

    let mut dft_err: f64 = 0.0;
    for len in 1..=64 {
        let s: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = dft(&s).unwrap();
        for (k, f) in fast.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in s.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / len as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            dft_err = dft_err.max((f.re - re).abs()).max((f.im - im).abs());
        }
    }
    outcome(
        ridge_err <= 1e-8 && lasso_err <= 1e-8 && dft_err <= 1e-9,
        format!("ridge residual {ridge_err:.1e}, lasso closed-form error {lasso_err:.1e} (tol 1e-8), DFT error {dft_err:.1e} (tol 1e-9)"),
    )
}

fn open_set_flaw(dataset: &Dataset) -> Outcome {
    let words = dataset.words.as_ref().expect("default dataset has words");
    let run = run_baseline(words, &BaselineConfig::default()).unwrap();
    let flaw = &run.report.flaw;
    outcome(
        flaw.classifier_labelled == 1.0 && flaw.authenticator_denial_rate >= 0.9,
        format!(
            "{} unseen trials: classifier labelled {:.0}% ({:.0}% as the password), authenticator denied {:.0}% (>= 90%)",
            flaw.trials,
            100.0 * flaw.classifier_labelled,
            100.0 * flaw.classifier_password_rate,
            100.0 * flaw.authenticator_denial_rate
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let manifest = dir.join("manifest.toml");
    let run = |out: &str| -> Vec<u8> {
        let path = dir.join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_wristsign"))
            .args(["--seed", "42", "evaluate"])
            .arg(&manifest)
            .arg("--out")
            .arg(&path)
            .status()
            .expect("run wristsign");
        assert!(status.success(), "evaluate failed: {status}");
        std::fs::read(path).unwrap()
    };
    let (a, b) = (run("report-a.json"), run("report-b.json"));
    outcome(
        a == b && !a.is_empty(),
        format!("two evaluate runs on the default dataset: {} and {} bytes, identical = {}", a.len(), b.len(), a == b),
    )
}

fn main() {
    let dataset = generate(&SynthConfig::default()).unwrap();
    let report = run_evaluation(&dataset, &EvalConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dataset, dir.path()).unwrap();

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("dtw-oracle", Box::new(dtw_oracle)),
        ("sg-exactness", Box::new(sg_exactness)),
        ("poisson-weights", Box::new(poisson_weights)),
        ("calibration-reproduction", Box::new(calibration_reproduction)),
        ("auc-oracle", Box::new(auc_oracle)),
        ("end-to-end-discrimination", Box::new(|| end_to_end(&dataset))),
        ("attack-ladder", Box::new(|| attack_ladder(&report))),
        ("fault-tolerance", Box::new(|| fault_tolerance(&report))),
        ("regression-and-dft-oracles", Box::new(regression_oracles)),
        ("open-set-flaw", Box::new(|| open_set_flaw(&dataset))),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
