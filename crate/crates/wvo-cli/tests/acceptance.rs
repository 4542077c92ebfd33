//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line (visible with --nocapture). Tolerances are pinned here,
//! not configurable.
//!
//! Criterion 7 is expected to fail its part (b): with 10 atoms per virtual
//! group the reconstructed between-school scale cannot carry the original
//! posterior's mass below the per-group atom spacing, which shows up as a
//! tau KS statistic above 0.08 in every fold. See the per-fold numbers the
//! test prints; scaling the per-group size to 40-60 atoms passes the same
//! thresholds, which isolates the limitation to the pinned size.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Mutex;
use std::time::Instant;

/// The two case-study criteria saturate the machine on their own; running
/// them concurrently would double-count wall time against their budgets.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_slot() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

use rand::Rng;
use rand_distr::{Beta, Distribution};

use wvo_core::diagnostics::{beta_mean_std, conjugate_beta_bernoulli_posterior};
use wvo_core::model::{family_by_name, LatentPoint, Observation, ObservationSet};
use wvo_core::objective::{
    build_single_context, eval_grad_k1, eval_grad_multi, eval_grad_single, objective_k1,
    objective_multi, objective_single, Mat, MultiLevelContext, SingleLevelContext,
    WeightAssignment,
};
use wvo_core::optimizer::{optimize_single, OptimizerConfig};
use wvo_core::rng::{stream, Prng};
use wvo_core::sampler::PosteriorSamples;
use wvo_core::virtualobs::draw_virtual_obs_single;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wvo")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_csv(path: &Path) -> Vec<HashMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).expect("csv opens");
    let headers: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().cloned().zip(r.iter().map(str::to_string)).collect()
        })
        .collect()
}

fn report_line(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
}

fn exact_beta_samples(alpha: f64, beta: f64, s: usize, rng: &mut Prng) -> PosteriorSamples {
    let dist = Beta::new(alpha, beta).unwrap();
    let rows: Vec<Vec<f64>> = (0..s).map(|_| vec![dist.sample(rng)]).collect();
    PosteriorSamples::from_rows(vec!["theta".into()], rows).unwrap()
}

fn obs(values: &[f64]) -> ObservationSet {
    ObservationSet::new(values.iter().map(|&v| Observation::plain(v)).collect()).unwrap()
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_beta_bernoulli_reconstruction() {
    let t0 = Instant::now();
    let y_star = [1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
    let y_hat = [0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]; // 5 ones, 7 zeros
    let fam = family_by_name("beta-bernoulli").unwrap();
    let mut rng = stream(101, 0);
    let samples = exact_beta_samples(9.0, 5.0, 5000, &mut rng);
    let ctx = build_single_context(fam.as_ref(), &samples, &obs(&y_star), &obs(&y_hat)).unwrap();
    let cfg = OptimizerConfig { max_iters: 2000, restarts: 3, seed: 2, ..Default::default() };
    let result = optimize_single(&ctx, &cfg).unwrap();
    let w = match &result.weights {
        WeightAssignment::Single { weights } => weights.clone(),
        _ => unreachable!(),
    };
    let ws: f64 = w.iter().zip(&y_hat).map(|(wi, y)| wi * y).sum();
    let wf: f64 = w.iter().zip(&y_hat).map(|(wi, y)| wi * (1.0 - y)).sum();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = (ws - 8.0).abs() < 0.15 && (wf - 4.0).abs() < 0.15 && elapsed < 10.0;
    report_line(
        "1 (beta-bernoulli reconstruction)",
        pass,
        &format!("weighted successes {ws:.4} (want 8±0.15), failures {wf:.4} (want 4±0.15), {elapsed:.1}s"),
    );
    assert!(pass, "weighted counts ({ws:.4}, {wf:.4}) or runtime {elapsed:.1}s out of bounds");
}

#[test]
fn criterion_2_conjugate_oracle_equivalence() {
    let t0 = Instant::now();
    let fam = family_by_name("beta-bernoulli").unwrap();
    let mut worst_mean = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut done = 0;
    let mut attempt = 0u64;
    while done < 20 {
        attempt += 1;
        let mut rng = stream(202, attempt);
        let n_star = rng.random_range(10..=30usize);
        let p = rng.random_range(0.3..0.7);
        let y_star: Vec<f64> =
            (0..n_star).map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect();
        let s: f64 = y_star.iter().sum();
        if s < 2.0 || s > n_star as f64 - 2.0 {
            continue;
        }
        let (alpha, beta) = (1.0 + s, 1.0 + n_star as f64 - s);
        let samples = exact_beta_samples(alpha, beta, 5000, &mut rng);
        let virtuals =
            draw_virtual_obs_single(fam.as_ref(), &samples, n_star, 500 + attempt).unwrap();
        let vset = virtuals.to_observation_set().unwrap();
        let ones: f64 = vset.iter().map(|o| o.value).sum();
        if ones == 0.0 || ones == n_star as f64 {
            continue;
        }
        let ctx =
            build_single_context(fam.as_ref(), &samples, &obs(&y_star), &vset).unwrap();
        let cfg = OptimizerConfig {
            max_iters: 1500,
            restarts: 2,
            seed: 300 + attempt,
            ..Default::default()
        };
        let result = optimize_single(&ctx, &cfg).unwrap();
        let w = match &result.weights {
            WeightAssignment::Single { weights } => weights.clone(),
            _ => unreachable!(),
        };
        let (a2, b2) =
            conjugate_beta_bernoulli_posterior(1.0, 1.0, vset.as_slice(), Some(&w)).unwrap();
        let (m0, s0) = beta_mean_std(alpha, beta);
        let (m1, s1) = beta_mean_std(a2, b2);
        worst_mean = worst_mean.max((m1 - m0).abs());
        worst_ratio = worst_ratio.max((s1 / s0 - 1.0).abs());
        done += 1;
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst_mean < 0.02 && worst_ratio < 0.05 && elapsed < 60.0;
    report_line(
        "2 (conjugate oracle equivalence)",
        pass,
        &format!("20 instances: worst |mean diff| {worst_mean:.4} (<0.02), worst |std ratio - 1| {worst_ratio:.4} (<0.05), {elapsed:.1}s"),
    );
    assert!(pass, "worst mean diff {worst_mean:.4}, worst ratio dev {worst_ratio:.4}, {elapsed:.1}s");
}

#[test]
fn criterion_3_gradient_correctness() {
    let t0 = Instant::now();
    let h = 1e-5;
    let tol = 1e-5;
    let mut worst = 0.0f64;

    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);

    // single level
    for case in 0..50u64 {
        let mut rng = stream(31, case);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..5).map(|_| rng.random_range(-4.0..-0.1)).collect())
            .collect();
        let base: Vec<f64> = (0..20).map(|_| rng.random_range(-6.0..-1.0)).collect();
        let ctx = SingleLevelContext::new(Mat::from_rows(rows).unwrap(), base, 5.0).unwrap();
        let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..2.0)).collect();
        let (_, grad) = eval_grad_single(&ctx, &raw).unwrap();
        for i in 0..raw.len() {
            let mut wp = raw.clone();
            wp[i] += h;
            let mut wm = raw.clone();
            wm[i] -= h;
            let num = (objective_single(&ctx, &wp).unwrap().total
                - objective_single(&ctx, &wm).unwrap().total)
                / (2.0 * h);
            worst = worst.max(rel(grad[i], num));
        }
    }

    // K = 1 mixture
    let random_multi = |rng: &mut Prng, k: usize, m: usize| -> MultiLevelContext {
        let lz: Vec<Mat> = (0..k)
            .map(|_| {
                Mat::from_rows(
                    (0..20)
                        .map(|_| (0..m).map(|_| rng.random_range(-4.0..-0.1)).collect())
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let base: Vec<f64> = (0..20).map(|_| rng.random_range(-6.0..-1.0)).collect();
        MultiLevelContext::new(lz, base, k as f64).unwrap()
    };
    let simplex = |rng: &mut Prng, n: usize, b: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let t: f64 = raw.iter().sum();
        raw.iter().map(|x| x * b / t).collect()
    };

    for case in 0..50u64 {
        let mut rng = stream(32, case);
        let ctx = random_multi(&mut rng, 1, 4);
        let w = simplex(&mut rng, 4, 1.0);
        let (_, grad) = eval_grad_k1(&ctx, &w).unwrap();
        for i in 0..w.len() {
            let mut wp = w.clone();
            wp[i] += h;
            let mut wm = w.clone();
            wm[i] -= h;
            let num = (objective_k1(&ctx, &wp).unwrap().total
                - objective_k1(&ctx, &wm).unwrap().total)
                / (2.0 * h);
            worst = worst.max(rel(grad[i], num));
        }
    }

    // multi level
    for case in 0..50u64 {
        let mut rng = stream(33, case);
        let ctx = random_multi(&mut rng, 3, 4);
        let v = simplex(&mut rng, 3, 3.0);
        let w: Vec<Vec<f64>> = (0..3).map(|_| simplex(&mut rng, 4, 1.0)).collect();
        let (_, gv, gw) = eval_grad_multi(&ctx, &v, &w).unwrap();
        for k in 0..3 {
            let mut vp = v.clone();
            vp[k] += h;
            let mut vm = v.clone();
            vm[k] -= h;
            let num = (objective_multi(&ctx, &vp, &w).unwrap().total
                - objective_multi(&ctx, &vm, &w).unwrap().total)
                / (2.0 * h);
            worst = worst.max(rel(gv[k], num));
            for i in 0..4 {
                let mut wp = w.clone();
                wp[k][i] += h;
                let mut wm = w.clone();
                wm[k][i] -= h;
                let num = (objective_multi(&ctx, &v, &wp).unwrap().total
                    - objective_multi(&ctx, &v, &wm).unwrap().total)
                    / (2.0 * h);
                worst = worst.max(rel(gw[k][i], num));
            }
        }
    }

    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst < tol && elapsed < 30.0;
    report_line(
        "3 (gradient correctness)",
        pass,
        &format!("150 random contexts, worst componentwise relative error {worst:.2e} (<1e-5), {elapsed:.1}s"),
    );
    assert!(pass, "worst relative error {worst:.2e}, {elapsed:.1}s");
}

#[test]
fn criterion_4_identity_invariants() {
    let fam = family_by_name("normal-noninformative").unwrap();
    let values = {
        let d = wvo_core::io::load_dataset(fam.as_ref(), &data("normal.csv")).unwrap();
        d.as_flat().unwrap().clone()
    };

    // reconditioned log joint == original log joint at 100 random points
    let virtuals = wvo_core::virtualobs::VirtualObservationSet::Single {
        observations: values.as_slice().to_vec(),
        source_samples: vec![0; values.len()],
        seed: 0,
    };
    let model = wvo_core::diagnostics::recondition(
        fam.as_ref(),
        &virtuals,
        WeightAssignment::Single { weights: vec![1.0; values.len()] },
    )
    .unwrap();
    let dataset = wvo_core::model::DataSet::Flat(values.clone());
    let original = wvo_core::sampler::ModelTarget::new(fam.as_ref(), &dataset).unwrap();
    let mut rng = stream(44, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let state = vec![rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)];
        let a = wvo_core::sampler::Target::log_density(&original, &state);
        let b = model.log_joint(&LatentPoint::new(state.clone()).unwrap());
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }

    // the penalty term equals log S exactly in the identity configuration
    let samples = PosteriorSamples::from_rows(
        vec!["mu".into(), "log_sigma".into()],
        (0..50)
            .map(|i| vec![-1.0 + 0.04 * i as f64, -0.5 + 0.02 * i as f64])
            .collect(),
    )
    .unwrap();
    let ctx = build_single_context(fam.as_ref(), &samples, &values, &values).unwrap();
    let v = objective_single(&ctx, &vec![1.0; values.len()]).unwrap();
    let exact = v.penalty == 50.0f64.ln();

    let pass = worst < 1e-12 && exact;
    report_line(
        "4 (identity invariants)",
        pass,
        &format!("worst log-joint relative error {worst:.2e} (<1e-12), penalty == ln S exactly: {exact}"),
    );
    assert!(pass, "worst {worst:.2e}, penalty exact {exact}");
}

fn pipeline(model: &str, dataf: &Path, out: &Path, seed: u64, extra: &[&str]) -> Output {
    let out_s = out.to_str().unwrap();
    let data_s = dataf.to_str().unwrap();
    let seed_s = seed.to_string();
    let mut fit_args = vec![
        "fit", "--model", model, "--data", data_s, "--out", out_s, "--seed", &seed_s,
        "--samples", "5000", "--warmup", "2000", "--thin", "10",
    ];
    fit_args.extend_from_slice(extra);
    run_ok(&fit_args);
    let mut rec_args = vec![
        "reconstruct", "--model", model, "--data", data_s, "--out", out_s, "--seed", &seed_s,
        "--restarts", "3", "--max-iters", "2000",
    ];
    rec_args.extend_from_slice(extra);
    run_ok(&rec_args);
    let mut val_args = vec![
        "validate", "--model", model, "--data", data_s, "--out", out_s, "--seed", &seed_s,
        "--samples", "5000", "--warmup", "2000", "--thin", "10",
    ];
    val_args.extend_from_slice(extra);
    run(&val_args)
}

fn check_thresholds(report: &[HashMap<String, String>], case: &str, params: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut detail = String::new();
    for p in params {
        let row = report
            .iter()
            .find(|r| r["case"] == case && r["param"] == *p)
            .unwrap_or_else(|| panic!("missing report row for {p}"));
        let md: f64 = row["mean_diff"].parse().unwrap();
        let sr: f64 = row["std_ratio"].parse().unwrap();
        let ks: f64 = row["ks"].parse().unwrap();
        let ok = md < 0.25 && sr > 0.8 && sr < 1.25 && ks < 0.08;
        pass &= ok;
        detail.push_str(&format!("{p}: md {md:.3} sr {sr:.3} ks {ks:.3}; "));
    }
    (pass, detail)
}

#[test]
fn criterion_5_normal_model_pipeline() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline("normal-noninformative", &data("normal.csv"), dir.path(), 9, &[]);
    let report = read_csv(&dir.path().join("validate_report.csv"));
    let (thresholds_ok, detail) = check_thresholds(&report, "reconstructed", &["mu", "sigma"]);
    let control_reported = report.iter().any(|r| r["case"] == "uniform_control");
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = out.status.success() && thresholds_ok && control_reported && elapsed < 120.0;
    report_line(
        "5 (normal model pipeline)",
        pass,
        &format!("{detail}control reported: {control_reported}, {elapsed:.1}s"),
    );
    assert!(pass, "{detail} exit {:?}, {elapsed:.1}s", out.status.code());
}

#[test]
fn criterion_6_normal_hyperprior_pipeline() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline(
        "normal-hyperprior",
        &data("normal.csv"),
        dir.path(),
        9,
        &["--forward-draws", "300", "--m-virtual", "10"],
    );
    let report = read_csv(&dir.path().join("validate_report.csv"));
    let (thresholds_ok, detail) = check_thresholds(&report, "reconstructed", &["nu", "tau"]);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = out.status.success() && thresholds_ok && elapsed < 300.0;
    report_line("6 (normal-with-hyperprior pipeline)", pass, &format!("{detail}{elapsed:.1}s"));
    assert!(pass, "{detail} exit {:?}, {elapsed:.1}s", out.status.code());
}

#[test]
fn criterion_7_eight_schools_loo() {
    let _slot = heavy_slot();
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "loo", "--model", "eight-schools",
        "--data", data("eight_schools.csv").to_str().unwrap(),
        "--out", dir.path().to_str().unwrap(),
        "--seed", "7",
        "--samples", "5000", "--warmup", "2000", "--thin", "10",
        "--forward-draws", "300",
        "--k-virtual", "14", "--m-virtual", "10",
        "--restarts", "2", "--max-iters", "2500",
        "--meb",
    ]);
    let report = read_csv(&dir.path().join("loo_report.csv"));
    assert_eq!(report.len(), 8);

    let col = |name: &str| -> Vec<f64> {
        report.iter().map(|r| r[name].parse::<f64>().unwrap()).collect()
    };
    let std_of = |xs: &[f64]| -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let wvo_mu = std_of(&col("wvo_mean_mu"));
    let wvo_tau = std_of(&col("wvo_mean_tau"));
    let meb_mu = std_of(&col("meb_mean_mu"));
    let meb_tau = std_of(&col("meb_mean_tau"));

    // (a) WVO fold variation beats MEB on at least one hyperparameter and
    // stays within 1.3x on the other
    let pairs = [(wvo_mu, meb_mu), (wvo_tau, meb_tau)];
    let a_pass = (0..2).any(|i| {
        let (w_i, m_i) = pairs[i];
        let (w_j, m_j) = pairs[1 - i];
        w_i <= m_i && w_j <= 1.3 * m_j
    });

    // (b) every fold's reconstruction passes the thresholds
    let b_pass = report.iter().all(|r| r["reconstruction_pass"] == "true");
    let worst_tau_ks = col("recon_ks_tau").iter().cloned().fold(0.0f64, f64::max);
    let worst_mu_ks = col("recon_ks_mu").iter().cloned().fold(0.0f64, f64::max);

    let elapsed = t0.elapsed().as_secs_f64();
    let pass = a_pass && b_pass && elapsed < 1200.0;
    report_line(
        "7 (eight schools LOO)",
        pass,
        &format!(
            "(a) fold std of means wvo/meb: mu {wvo_mu:.4}/{meb_mu:.4}, tau {wvo_tau:.4}/{meb_tau:.4} -> {}; \
             (b) all folds pass thresholds: {b_pass} (worst fold KS: mu {worst_mu_ks:.3}, tau {worst_tau_ks:.3}); {elapsed:.0}s",
            if a_pass { "PASS" } else { "FAIL" },
        ),
    );
    assert!(
        pass,
        "(a) {}: wvo mu {wvo_mu:.4} vs meb {meb_mu:.4}, wvo tau {wvo_tau:.4} vs meb {meb_tau:.4}; \
         (b) {}: with 10 atoms per virtual group the reconstructed tau marginal cannot carry the \
         posterior's mass below the per-group atom spacing (worst fold tau KS {worst_tau_ks:.3} vs \
         the 0.08 bound; mu KS {worst_mu_ks:.3} passes). The same pipeline passes all thresholds \
         at 40-60 atoms per group, isolating the limitation to the pinned per-group size.",
        if a_pass { "PASS" } else { "FAIL" },
        if b_pass { "PASS" } else { "FAIL" },
    );
}

#[test]
fn criterion_8_rats_subsampling_sweep() {
    let _slot = heavy_slot();
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "sweep-k", "--model", "rats-binomial",
        "--data", data("rats.csv").to_str().unwrap(),
        "--out", dir.path().to_str().unwrap(),
        "--seed", "7",
        "--samples", "1500", "--warmup", "250000", "--thin", "400",
        "--forward-draws", "50",
        "--m-virtual", "10",
        "--restarts", "1", "--max-iters", "600",
        "--k-list", "5,10,20,40,71",
        "--folds", "30",
    ]);
    let summary = read_csv(&dir.path().join("sweep_summary.csv"));
    assert_eq!(summary.len(), 5);
    let at = |k: &str, col: &str| -> f64 {
        summary.iter().find(|r| r["k_virtual"] == k).unwrap()[col].parse().unwrap()
    };
    let a40 = at("40", "std_of_means_alpha");
    let a71 = at("71", "std_of_means_alpha");
    let b40 = at("40", "std_of_means_beta");
    let b71 = at("71", "std_of_means_beta");

    let elapsed = t0.elapsed().as_secs_f64();
    let pass = a40 <= 1.3 * a71 && b40 <= 1.3 * b71 && elapsed < 2700.0;
    report_line(
        "8 (rats subsampling sweep)",
        pass,
        &format!(
            "fold std of means at K=40 vs K=71: alpha {a40:.4}/{a71:.4}, beta {b40:.4}/{b71:.4} (need <=1.3x); {elapsed:.0}s"
        ),
    );
    for r in &summary {
        println!(
            "  K={:>2}: std alpha {:.4}, std beta {:.4}",
            r["k_virtual"], at(&r["k_virtual"], "std_of_means_alpha"), at(&r["k_virtual"], "std_of_means_beta")
        );
    }
    assert!(pass, "alpha {a40:.4} vs {a71:.4}, beta {b40:.4} vs {b71:.4}, {elapsed:.0}s");
}

#[test]
fn criterion_9_determinism() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out_a = pipeline("normal-noninformative", &data("normal.csv"), dir_a.path(), 9, &[]);
    let out_b = pipeline("normal-noninformative", &data("normal.csv"), dir_b.path(), 9, &[]);
    assert!(out_a.status.success() && out_b.status.success());

    let mut pass = true;
    let mut detail = String::new();
    for file in ["samples.csv", "ess.csv", "manifest.json", "wvo.json", "trace.csv", "validate_report.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        let same = a == b;
        pass &= same;
        detail.push_str(&format!("{file}: {}; ", if same { "identical" } else { "DIFFERS" }));
    }
    report_line("9 (determinism)", pass, &detail);
    assert!(pass, "{detail}");
}
