//! `wvo` turns a fitted posterior into a small weighted set of virtual
//! observations and checks that re-conditioning on them reproduces the
//! posterior. Subcommands: fit, reconstruct, validate, loo, sweep-k.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use wvo_core::diagnostics::{
    compare_posteriors, recondition, uniform_weights, DiagThresholds, PosteriorComparison,
    ReconditionedTarget,
};
use wvo_core::io;
use wvo_core::loo::{
    evenly_spaced_folds, fold_std_of_means, loo_cross_validation, reconstruct_multi, sweep_k,
    LooConfig,
};
use wvo_core::model::{family_by_name, DataSet, ModelFamily};
use wvo_core::objective::build_single_context;
use wvo_core::optimizer::{optimize_single, OptimizerConfig};
use wvo_core::rng::sub_seed;
use wvo_core::sampler::{estimate_group_logliks, run_mh, run_mh_target, SamplerConfig};
use wvo_core::virtualobs::draw_virtual_obs_single;
use wvo_core::Error;

#[derive(Parser)]
#[command(
    name = "wvo",
    about = "Posterior reconstruction through weighted virtual observations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run inference and cache posterior samples (plus the group marginal
    /// likelihood table for multi-level models).
    Fit(RunArgs),
    /// Draw virtual observations and optimize their weights.
    Reconstruct(RunArgs),
    /// Re-sample the reconditioned model and compare posteriors.
    Validate(RunArgs),
    /// Leave-one-out cross-validation of incremental updates.
    Loo(LooArgs),
    /// Reconstruction-error sweep over the virtual group count.
    SweepK(SweepArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Model family name (see `wvo fit --help` for the registry).
    #[arg(long)]
    model: String,
    /// Input CSV (column y; sigma/n for known constants; group for
    /// multi-level data).
    #[arg(long)]
    data: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Retained posterior draws.
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = 1000)]
    warmup: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Virtual observation count for single-level models (default N*).
    #[arg(long)]
    n_virtual: Option<usize>,
    /// Virtual group count for multi-level models (default K*).
    #[arg(long)]
    k_virtual: Option<usize>,
    /// Virtual observations per group for multi-level models.
    #[arg(long, default_value_t = 10)]
    m_virtual: usize,
    /// Forward draws per group marginal likelihood entry (T).
    #[arg(long, default_value_t = 100)]
    forward_draws: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Optimizer step size.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Convergence tolerance on the 20-iteration objective window.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Jointly optimize the multi-level group weights v instead of pinning
    /// them at the uniform budget. Virtual groups are exchangeable, so the
    /// pinned uniform v is the symmetric default; joint optimization can
    /// chase a handful of poorly covered posterior samples and concentrate
    /// v onto one group.
    #[arg(long, default_value_t = false)]
    optimize_group_weights: bool,
    /// Also snapshot the objective context under out/context/.
    #[arg(long, default_value_t = false)]
    save_context: bool,
}

#[derive(Args, Clone)]
struct LooArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also run the marginal empirical-Bayes baseline.
    #[arg(long, default_value_t = false)]
    meb: bool,
    /// Number of evenly spaced folds (default: every group).
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated virtual group counts to sweep.
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<usize>,
    /// Number of evenly spaced folds (default: every group).
    #[arg(long)]
    folds: Option<usize>,
}

impl RunArgs {
    fn sampler_config(&self) -> SamplerConfig {
        SamplerConfig {
            n_samples: self.samples,
            warmup: self.warmup,
            thin: self.thin,
            n_chains: self.chains,
            target_accept: None,
            init_scale: 0.5,
            seed: self.seed,
        }
    }

    fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iters: self.max_iters,
            step_size: self.step,
            tolerance: self.tol,
            restarts: self.restarts,
            seed: sub_seed(self.seed, &[100]),
            pin_group_weights: !self.optimize_group_weights,
        }
    }

    fn config_hash(&self) -> String {
        io::config_hash(&format!(
            "model={};seed={};samples={};warmup={};thin={};chains={};n={:?};k={:?};m={};t={};restarts={};max_iters={};step={};tol={};joint_v={}",
            self.model,
            self.seed,
            self.samples,
            self.warmup,
            self.thin,
            self.chains,
            self.n_virtual,
            self.k_virtual,
            self.m_virtual,
            self.forward_draws,
            self.restarts,
            self.max_iters,
            self.step,
            self.tol,
            self.optimize_group_weights,
        ))
    }

    fn family(&self) -> wvo_core::Result<Box<dyn ModelFamily>> {
        family_by_name(&self.model)
    }
}

#[derive(Serialize, Deserialize)]
struct FitManifest {
    schema_version: u32,
    command: String,
    model: String,
    data_file: String,
    seed: u64,
    config_hash: String,
    sampler: SamplerConfig,
    t_draws: Option<usize>,
    grouplik_neg_inf: Option<usize>,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("WVO_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Reconstruct(args) => cmd_reconstruct(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Loo(args) => cmd_loo(&args),
        Command::SweepK(args) => cmd_sweep_k(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Usage(_) | Error::Data(_) | Error::Format(_) | Error::Io(_) | Error::Csv(_) => 2,
        Error::Init(_) | Error::Divergence(_) | Error::DegenerateContext(_) | Error::Numerical(_) => 3,
    }
}

fn cmd_fit(args: &RunArgs) -> wvo_core::Result<ExitCode> {
    let family = args.family()?;
    let data = io::load_dataset(family.as_ref(), &args.data)?;
    let sampler = args.sampler_config();
    let samples = run_mh(family.as_ref(), &data, &sampler)?;

    let (t_draws, table) = match &data {
        DataSet::Grouped(grouped) => {
            let table = estimate_group_logliks(
                family.as_ref(),
                grouped,
                &samples,
                args.forward_draws,
                sub_seed(args.seed, &[1]),
            )?;
            (Some(args.forward_draws), Some(table))
        }
        DataSet::Flat(_) => (None, None),
    };

    std::fs::create_dir_all(&args.out)?;
    io::write_samples_csv(&args.out.join("samples.csv"), &samples)?;
    io::write_ess_csv(&args.out.join("ess.csv"), &samples)?;
    if let Some(table) = &table {
        io::write_grouplik_csv(&args.out.join("grouplik.csv"), table)?;
        if table.n_neg_inf > 0 {
            eprintln!(
                "warning: {} group likelihood entries hit -inf; consider raising --forward-draws",
                table.n_neg_inf
            );
        }
    }
    let manifest = FitManifest {
        schema_version: io::WVO_SCHEMA_VERSION,
        command: "fit".into(),
        model: args.model.clone(),
        data_file: args.data.display().to_string(),
        seed: args.seed,
        config_hash: args.config_hash(),
        sampler,
        t_draws,
        grouplik_neg_inf: table.as_ref().map(|t| t.n_neg_inf),
    };
    io::write_json(&args.out.join("manifest.json"), &manifest)?;

    println!("fit: {} samples of {} parameter(s)", samples.n_samples(), samples.dim());
    for (j, name) in samples.names().iter().enumerate() {
        println!(
            "  {name}: mean {:.4}, std {:.4}, ess {:.0}",
            samples.column_mean(j),
            samples.column_std(j),
            samples.ess[j]
        );
    }
    println!("  acceptance rate {:.3}", samples.acceptance_rate);
    Ok(ExitCode::SUCCESS)
}

fn require_fit_artifacts(args: &RunArgs) -> wvo_core::Result<FitManifest> {
    let manifest_path = args.out.join("manifest.json");
    if !manifest_path.exists() || !args.out.join("samples.csv").exists() {
        return Err(Error::usage(format!(
            "no fit artifacts in {}; run `wvo fit` first",
            args.out.display()
        )));
    }
    io::read_json(&manifest_path)
}

fn write_trace_csv(path: &Path, trace: &[f64]) -> wvo_core::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(wvo_core::Error::from)?;
    w.write_record(["iteration", "objective"]).map_err(wvo_core::Error::from)?;
    for (i, v) in trace.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v}")]).map_err(wvo_core::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_reconstruct(args: &RunArgs) -> wvo_core::Result<ExitCode> {
    let family = args.family()?;
    let data = io::load_dataset(family.as_ref(), &args.data)?;
    let manifest = require_fit_artifacts(args)?;
    let samples = io::read_samples_csv(&args.out.join("samples.csv"))?;
    let optimizer = args.optimizer_config();

    let (wvo, trace) = match &data {
        DataSet::Flat(originals) => {
            let n_virtual = args.n_virtual.unwrap_or(originals.len());
            let virtuals = draw_virtual_obs_single(
                family.as_ref(),
                &samples,
                n_virtual,
                sub_seed(args.seed, &[10]),
            )?;
            let ctx = build_single_context(
                family.as_ref(),
                &samples,
                originals,
                &virtuals.to_observation_set()?,
            )?;
            if args.save_context {
                io::save_single_context(&args.out.join("context"), &ctx)?;
            }
            let result = optimize_single(&ctx, &optimizer)?;
            let file = io::WvoFile::new(
                &args.model,
                originals.len() as f64,
                args.seed,
                args.config_hash(),
                virtuals,
                result.weights.clone(),
                result.objective,
                result.converged,
            );
            (file, result.trace)
        }
        DataSet::Grouped(grouped) => {
            let table = io::read_grouplik_csv(
                &args.out.join("grouplik.csv"),
                manifest.t_draws.unwrap_or(args.forward_draws),
            )
            .map_err(|_| {
                Error::usage(format!(
                    "no group likelihood table in {}; run `wvo fit` first",
                    args.out.display()
                ))
            })?;
            let k_virtual = args.k_virtual.unwrap_or(grouped.n_groups());
            let (virtuals, result) = reconstruct_multi(
                family.as_ref(),
                &samples,
                &table,
                k_virtual,
                args.m_virtual,
                &optimizer,
                sub_seed(args.seed, &[10]),
            )?;
            if args.save_context {
                let ctx = wvo_core::objective::build_multi_context(
                    family.as_ref(),
                    &samples,
                    &table,
                    &virtuals,
                )?;
                io::save_multi_context(&args.out.join("context"), &ctx)?;
            }
            let file = io::WvoFile::new(
                &args.model,
                grouped.n_groups() as f64,
                args.seed,
                args.config_hash(),
                virtuals,
                result.weights.clone(),
                result.objective,
                result.converged,
            );
            (file, result.trace)
        }
    };

    io::write_wvo_file(&args.out.join("wvo.json"), &wvo)?;
    write_trace_csv(&args.out.join("trace.csv"), &trace)?;

    match &wvo.weights {
        wvo_core::objective::WeightAssignment::Single { weights } => {
            println!(
                "reconstruct: {} virtual observations, weight sum {:.6}",
                weights.len(),
                weights.iter().sum::<f64>()
            );
        }
        wvo_core::objective::WeightAssignment::Multi { group_weights, within_weights } => {
            println!(
                "reconstruct: {} virtual groups x {} values, group weight sum {:.6}",
                group_weights.len(),
                within_weights.first().map_or(0, |w| w.len()),
                group_weights.iter().sum::<f64>()
            );
        }
    }
    println!(
        "  objective {:.6} (fit {:.6}, penalty {:.6}), converged: {}",
        wvo.objective.total, wvo.objective.fit, wvo.objective.penalty, wvo.converged
    );
    Ok(ExitCode::SUCCESS)
}

fn resample_reconditioned(
    family: &dyn ModelFamily,
    virtuals: &wvo_core::virtualobs::VirtualObservationSet,
    weights: wvo_core::objective::WeightAssignment,
    sampler: &SamplerConfig,
) -> wvo_core::Result<wvo_core::sampler::PosteriorSamples> {
    let model = recondition(family, virtuals, weights)?;
    let target = ReconditionedTarget::new(&model);
    run_mh_target(&target, sampler)
}

fn cmd_validate(args: &RunArgs) -> wvo_core::Result<ExitCode> {
    let family = args.family()?;
    let data = io::load_dataset(family.as_ref(), &args.data)?;
    let _manifest = require_fit_artifacts(args)?;
    let wvo_path = args.out.join("wvo.json");
    if !wvo_path.exists() {
        return Err(Error::usage(format!(
            "no wvo.json in {}; run `wvo reconstruct` first",
            args.out.display()
        )));
    }
    let wvo = io::read_wvo_file(&wvo_path)?;
    if wvo.model != args.model {
        return Err(Error::usage(format!(
            "wvo.json was built for model '{}', not '{}'",
            wvo.model, args.model
        )));
    }
    let expected_budget = match &data {
        DataSet::Flat(o) => o.len() as f64,
        DataSet::Grouped(g) => g.n_groups() as f64,
    };
    if (wvo.budget - expected_budget).abs() > 1e-9 {
        return Err(Error::usage(format!(
            "wvo budget {} does not match the dataset ({expected_budget})",
            wvo.budget
        )));
    }

    let original = io::read_samples_csv(&args.out.join("samples.csv"))?;
    let original_nat = original.to_natural(family.as_ref())?;

    let mut sampler = args.sampler_config();
    sampler.seed = sub_seed(args.seed, &[20]);
    let reconstructed = resample_reconditioned(
        family.as_ref(),
        &wvo.virtuals,
        wvo.weights.clone(),
        &sampler,
    )?
    .to_natural(family.as_ref())?;
    let cmp = compare_posteriors(&original_nat, &reconstructed)?;
    let thresholds = DiagThresholds::default();
    let pass = cmp.passes(&thresholds);

    // negative control: same virtual values, uniform weights
    let mut control_sampler = args.sampler_config();
    control_sampler.seed = sub_seed(args.seed, &[21]);
    let control = resample_reconditioned(
        family.as_ref(),
        &wvo.virtuals,
        uniform_weights(&wvo.virtuals, wvo.budget),
        &control_sampler,
    )?
    .to_natural(family.as_ref())?;
    let control_cmp = compare_posteriors(&original_nat, &control)?;
    let control_pass = control_cmp.passes(&thresholds);

    std::fs::create_dir_all(&args.out)?;
    io::write_comparison_csv(
        &args.out.join("validate_report.csv"),
        &[
            ("reconstructed".to_string(), cmp.clone(), pass),
            ("uniform_control".to_string(), control_cmp.clone(), control_pass),
        ],
        &args.config_hash(),
        args.seed,
    )?;

    print_comparison("reconstructed", &cmp);
    print_comparison("uniform_control (informational)", &control_cmp);
    println!("validate: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn print_comparison(label: &str, cmp: &PosteriorComparison) {
    println!("{label}:");
    for d in &cmp.dims {
        println!(
            "  {}: mean diff {:.4} sd, std ratio {:.4}, ks {:.4}",
            d.name, d.mean_diff, d.std_ratio, d.ks
        );
    }
}

fn loo_config(args: &RunArgs, with_meb: bool) -> LooConfig {
    LooConfig {
        sampler: args.sampler_config(),
        optimizer: args.optimizer_config(),
        k_virtual: args.k_virtual,
        m_virtual: args.m_virtual,
        t_draws: args.forward_draws,
        with_meb,
        check_reconstruction: true,
        thresholds: DiagThresholds::default(),
        update_sampler: None,
        seed: args.seed,
    }
}

fn cmd_loo(args: &LooArgs) -> wvo_core::Result<ExitCode> {
    let family = args.run.family()?;
    let data = io::load_dataset(family.as_ref(), &args.run.data)?;
    let grouped = data.as_grouped()?;
    if grouped.n_groups() < 2 {
        return Err(Error::usage("leave-one-out requires at least two groups"));
    }
    let config = loo_config(&args.run, args.meb);
    let folds = match args.folds {
        Some(n) => evenly_spaced_folds(grouped.n_groups(), n),
        None => Vec::new(),
    };
    let records = loo_cross_validation(family.as_ref(), grouped, &config, &folds)?;

    std::fs::create_dir_all(&args.run.out)?;
    io::write_fold_report_csv(
        &args.run.out.join("loo_report.csv"),
        &records,
        &args.run.config_hash(),
        args.run.seed,
    )?;

    let names = &records[0].param_names;
    let wvo_std = fold_std_of_means(&records, false);
    println!("loo: {} folds", records.len());
    for (j, name) in names.iter().enumerate() {
        println!("  fold std of posterior mean [{name}], wvo: {:.4}", wvo_std[j]);
    }
    if args.meb {
        let meb_std = fold_std_of_means(&records, true);
        for (j, name) in names.iter().enumerate() {
            println!("  fold std of posterior mean [{name}], meb: {:.4}", meb_std[j]);
        }
    }
    let n_pass = records.iter().filter(|r| r.reconstruction_pass == Some(true)).count();
    println!("  reconstructions passing thresholds: {n_pass}/{}", records.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep_k(args: &SweepArgs) -> wvo_core::Result<ExitCode> {
    if args.k_list.is_empty() {
        return Err(Error::usage("--k-list requires at least one value"));
    }
    let family = args.run.family()?;
    let data = io::load_dataset(family.as_ref(), &args.run.data)?;
    let grouped = data.as_grouped()?;
    let mut config = loo_config(&args.run, false);
    config.check_reconstruction = false;
    let folds = match args.folds {
        Some(n) => evenly_spaced_folds(grouped.n_groups(), n),
        None => Vec::new(),
    };
    let report = sweep_k(family.as_ref(), grouped, &config, &args.k_list, &folds)?;

    std::fs::create_dir_all(&args.run.out)?;
    io::write_sweep_csv(
        &args.run.out.join("sweep_rows.csv"),
        &args.run.out.join("sweep_summary.csv"),
        &report,
        &args.run.config_hash(),
        args.run.seed,
    )?;

    println!("sweep-k over {:?}:", args.k_list);
    for s in &report.summary {
        let stds: Vec<String> =
            s.std_of_means.iter().map(|v| format!("{v:.4}")).collect();
        println!("  K̂ = {:>3}: fold std of means [{}]", s.k_virtual, stds.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}
