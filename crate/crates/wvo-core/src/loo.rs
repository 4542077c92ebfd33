//! Leave-one-out cross-validation for incremental updates: reconstruct the
//! posterior of every K-1 subset as weighted virtual observations, update
//! with the held-out group, and record how the hyperparameter posteriors
//! vary fold to fold (for the virtual-observation route and, optionally,
//! the marginal empirical-Bayes baseline).

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    compare_posteriors, meb_fit, meb_spec_for, recondition, DiagThresholds, MebTarget,
    PosteriorComparison, ReconditionedTarget,
};
use crate::error::{Error, Result};
use crate::math;
use crate::model::{DataSet, GroupedData, ModelFamily};
use crate::objective::build_multi_context;
use crate::optimizer::{optimize_multi, OptimizationResult, OptimizerConfig};
use crate::par;
use crate::rng::sub_seed;
use crate::sampler::{
    estimate_group_logliks, run_mh, run_mh_target, GroupLikTable, PosteriorSamples, SamplerConfig,
};
use crate::virtualobs::{draw_virtual_groups, VirtualObservationSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooConfig {
    pub sampler: SamplerConfig,
    pub optimizer: OptimizerConfig,
    /// Virtual group count; defaults to the fold's group count.
    pub k_virtual: Option<usize>,
    pub m_virtual: usize,
    /// Forward draws per group marginal likelihood entry.
    pub t_draws: usize,
    /// Also run the marginal empirical-Bayes baseline per fold.
    pub with_meb: bool,
    /// Re-sample the reconstruction alone and compare it against the
    /// fold posterior at these thresholds.
    pub check_reconstruction: bool,
    pub thresholds: DiagThresholds,
    /// Sampler for the post-reconstruction runs (virtual-evidence update,
    /// reconstruction check, empirical-Bayes update). Those targets are
    /// low-dimensional — hyperparameters plus at most one group — so when
    /// unset, the fold sampler is reused with warmup capped at 5000 and
    /// thinning at 10.
    pub update_sampler: Option<SamplerConfig>,
    pub seed: u64,
}

impl Default for LooConfig {
    fn default() -> Self {
        LooConfig {
            sampler: SamplerConfig::default(),
            optimizer: OptimizerConfig::default(),
            k_virtual: None,
            m_virtual: 10,
            t_draws: 100,
            with_meb: false,
            check_reconstruction: true,
            thresholds: DiagThresholds::default(),
            update_sampler: None,
            seed: 0,
        }
    }
}

impl LooConfig {
    fn update_sampler(&self) -> SamplerConfig {
        self.update_sampler.clone().unwrap_or_else(|| SamplerConfig {
            warmup: self.sampler.warmup.min(5000),
            thin: self.sampler.thin.min(10),
            ..self.sampler.clone()
        })
    }
}

/// One fold's hyperparameter posterior summaries (natural coordinates).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub label: String,
    pub param_names: Vec<String>,
    pub wvo_mean: Vec<f64>,
    pub wvo_std: Vec<f64>,
    pub meb_mean: Option<Vec<f64>>,
    pub meb_std: Option<Vec<f64>>,
    pub reconstruction: Option<PosteriorComparison>,
    pub reconstruction_pass: Option<bool>,
    pub objective: f64,
    pub converged: bool,
}

/// Draws virtual groups, builds the context, and maximizes the multi-level
/// objective. The group likelihood table must come from the same samples.
pub fn reconstruct_multi(
    family: &dyn ModelFamily,
    samples: &PosteriorSamples,
    table: &GroupLikTable,
    k_virtual: usize,
    m_virtual: usize,
    optimizer: &OptimizerConfig,
    draw_seed: u64,
) -> Result<(VirtualObservationSet, OptimizationResult)> {
    let virtuals = draw_virtual_groups(family, samples, k_virtual, m_virtual, draw_seed)?;
    let ctx = build_multi_context(family, samples, table, &virtuals)?;
    let result = optimize_multi(&ctx, optimizer)?;
    Ok((virtuals, result))
}

/// Runs every fold in `folds` (all groups when empty). Folds execute in
/// parallel on seed-split rng streams, so results do not depend on
/// scheduling.
pub fn loo_cross_validation(
    family: &dyn ModelFamily,
    data: &GroupedData,
    config: &LooConfig,
    folds: &[usize],
) -> Result<Vec<FoldRecord>> {
    if !family.is_multi_level() {
        return Err(Error::usage("leave-one-out needs a multi-level family"));
    }
    if data.n_groups() < 2 {
        return Err(Error::usage("leave-one-out requires at least two groups"));
    }
    let all: Vec<usize>;
    let folds = if folds.is_empty() {
        all = (0..data.n_groups()).collect();
        &all
    } else {
        folds
    };
    for &f in folds {
        if f >= data.n_groups() {
            return Err(Error::usage(format!("fold index {f} out of range")));
        }
    }

    let records: Vec<Result<FoldRecord>> = par::map_indexed(folds.len(), |i| {
        run_fold(family, data, config, folds[i])
    });
    records.into_iter().collect()
}

fn run_fold(
    family: &dyn ModelFamily,
    data: &GroupedData,
    config: &LooConfig,
    fold: usize,
) -> Result<FoldRecord> {
    let (rest, held) = data.leave_one_out(fold)?;
    let prep = prepare_fold(family, &rest, config, fold)?;
    let k_virtual = config.k_virtual.unwrap_or(rest.n_groups());
    fold_record_for_k(family, config, fold, data.labels()[fold].clone(), &prep, &held, k_virtual)
}

struct FoldPrep {
    samples: PosteriorSamples,
    table: GroupLikTable,
}

fn prepare_fold(
    family: &dyn ModelFamily,
    rest: &GroupedData,
    config: &LooConfig,
    fold: usize,
) -> Result<FoldPrep> {
    let mut sampler = config.sampler.clone();
    sampler.seed = sub_seed(config.seed, &[fold as u64, 1]);
    let samples = run_mh(family, &DataSet::Grouped(rest.clone()), &sampler)?;
    let table = estimate_group_logliks(
        family,
        rest,
        &samples,
        config.t_draws,
        sub_seed(config.seed, &[fold as u64, 2]),
    )?;
    Ok(FoldPrep { samples, table })
}

#[allow(clippy::too_many_arguments)]
fn fold_record_for_k(
    family: &dyn ModelFamily,
    config: &LooConfig,
    fold: usize,
    label: String,
    prep: &FoldPrep,
    held: &crate::model::ObservationSet,
    k_virtual: usize,
) -> Result<FoldRecord> {
    let mut optimizer = config.optimizer.clone();
    optimizer.seed = sub_seed(config.seed, &[fold as u64, 3, k_virtual as u64]);
    let (virtuals, opt) = reconstruct_multi(
        family,
        &prep.samples,
        &prep.table,
        k_virtual,
        config.m_virtual,
        &optimizer,
        sub_seed(config.seed, &[fold as u64, 4, k_virtual as u64]),
    )?;

    let model = recondition(family, &virtuals, opt.weights.clone())?;

    // incremental update: virtual evidence plus the held-out group
    let mut sampler = config.update_sampler();
    sampler.seed = sub_seed(config.seed, &[fold as u64, 5, k_virtual as u64]);
    let target = ReconditionedTarget::with_groups(&model, vec![held.clone()]);
    let updated = run_mh_target(&target, &sampler)?.to_natural(family)?;
    let wvo_mean: Vec<f64> = (0..updated.dim()).map(|j| updated.column_mean(j)).collect();
    let wvo_std: Vec<f64> = (0..updated.dim()).map(|j| updated.column_std(j)).collect();

    let (reconstruction, reconstruction_pass) = if config.check_reconstruction {
        let mut sampler = config.update_sampler();
        sampler.seed = sub_seed(config.seed, &[fold as u64, 6, k_virtual as u64]);
        let recon_target = ReconditionedTarget::new(&model);
        let recon = run_mh_target(&recon_target, &sampler)?.to_natural(family)?;
        let cmp = compare_posteriors(&prep.samples.to_natural(family)?, &recon)?;
        let pass = cmp.passes(&config.thresholds);
        (Some(cmp), Some(pass))
    } else {
        (None, None)
    };

    let (meb_mean, meb_std) = if config.with_meb {
        let fits = meb_fit(&prep.samples.to_natural(family)?, &meb_spec_for(family))?;
        let held_only = GroupedData::new(vec![held.clone()], vec![label.clone()])?;
        let mut sampler = config.update_sampler();
        sampler.seed = sub_seed(config.seed, &[fold as u64, 7, k_virtual as u64]);
        let target = MebTarget { family, priors: &fits, groups: &held_only };
        let meb = run_mh_target(&target, &sampler)?.to_natural(family)?;
        let mean: Vec<f64> = (0..meb.dim()).map(|j| meb.column_mean(j)).collect();
        let std: Vec<f64> = (0..meb.dim()).map(|j| meb.column_std(j)).collect();
        (Some(mean), Some(std))
    } else {
        (None, None)
    };

    Ok(FoldRecord {
        fold,
        label,
        param_names: family.natural_names(),
        wvo_mean,
        wvo_std,
        meb_mean,
        meb_std,
        reconstruction,
        reconstruction_pass,
        objective: opt.objective.total,
        converged: opt.converged,
    })
}

/// Fold-to-fold standard deviation of the posterior means, per dimension.
pub fn fold_std_of_means(records: &[FoldRecord], meb: bool) -> Vec<f64> {
    let dim = records[0].wvo_mean.len();
    (0..dim)
        .map(|j| {
            let xs: Vec<f64> = records
                .iter()
                .map(|r| {
                    if meb {
                        r.meb_mean.as_ref().expect("meb requested")[j]
                    } else {
                        r.wvo_mean[j]
                    }
                })
                .collect();
            math::std_dev(&xs)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// group subsampling sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub k_virtual: usize,
    pub fold: usize,
    pub label: String,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub k_virtual: usize,
    /// Fold-to-fold standard deviation of the posterior means, per
    /// hyperparameter dimension.
    pub std_of_means: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub param_names: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

/// `max_folds` evenly spaced hold-out indices.
pub fn evenly_spaced_folds(n_groups: usize, max_folds: usize) -> Vec<usize> {
    let m = max_folds.min(n_groups);
    (0..m).map(|i| i * n_groups / m).collect()
}

/// Reruns the reconstruction at each virtual-group count K̂ over a reduced
/// set of leave-one-out folds. The per-fold posterior fit and group
/// likelihood table are shared across all K̂ values.
pub fn sweep_k(
    family: &dyn ModelFamily,
    data: &GroupedData,
    config: &LooConfig,
    k_values: &[usize],
    folds: &[usize],
) -> Result<SweepReport> {
    if !family.is_multi_level() {
        return Err(Error::usage("the sweep needs a multi-level family"));
    }
    if data.n_groups() < 2 {
        return Err(Error::usage("the sweep requires at least two groups"));
    }
    if k_values.is_empty() {
        return Err(Error::usage("at least one K̂ value required"));
    }
    let all: Vec<usize>;
    let folds = if folds.is_empty() {
        all = (0..data.n_groups()).collect();
        &all
    } else {
        folds
    };

    let per_fold: Vec<Result<Vec<SweepRow>>> = par::map_indexed(folds.len(), |i| {
        let fold = folds[i];
        let (rest, held) = data.leave_one_out(fold)?;
        let prep = prepare_fold(family, &rest, config, fold)?;
        let mut rows = Vec::with_capacity(k_values.len());
        for &k in k_values {
            let record = fold_record_for_k(
                family,
                config,
                fold,
                data.labels()[fold].clone(),
                &prep,
                &held,
                k,
            )?;
            rows.push(SweepRow {
                k_virtual: k,
                fold,
                label: record.label.clone(),
                mean: record.wvo_mean.clone(),
            });
        }
        Ok(rows)
    });

    let mut rows = Vec::new();
    for fold_rows in per_fold {
        rows.extend(fold_rows?);
    }

    let dim = family.latent_dim();
    let mut summary = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let std_of_means: Vec<f64> = (0..dim)
            .map(|j| {
                let xs: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.k_virtual == k)
                    .map(|r| r.mean[j])
                    .collect();
                math::std_dev(&xs)
            })
            .collect();
        summary.push(SweepSummary { k_virtual: k, std_of_means });
    }

    Ok(SweepReport { param_names: family.natural_names(), rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{family_by_name, Observation, ObservationSet};

    fn two_group_schools() -> GroupedData {
        GroupedData::unlabeled(vec![
            ObservationSet::new(vec![Observation::with_aux(5.0, 9.0)]).unwrap(),
            ObservationSet::new(vec![Observation::with_aux(-2.0, 11.0)]).unwrap(),
        ])
        .unwrap()
    }

    fn quick_config() -> LooConfig {
        LooConfig {
            sampler: SamplerConfig {
                n_samples: 400,
                warmup: 400,
                thin: 2,
                ..Default::default()
            },
            optimizer: OptimizerConfig { max_iters: 150, restarts: 2, ..Default::default() },
            m_virtual: 6,
            t_draws: 30,
            check_reconstruction: false,
            seed: 12,
            ..Default::default()
        }
    }

    #[test]
    fn smallest_legal_case_runs_both_folds() {
        let fam = family_by_name("eight-schools").unwrap();
        let records =
            loo_cross_validation(fam.as_ref(), &two_group_schools(), &quick_config(), &[])
                .unwrap();
        assert_eq!(records.len(), 2);
        for r in &records {
            assert_eq!(r.wvo_mean.len(), 2);
            assert!(r.wvo_mean.iter().all(|m| m.is_finite()));
            assert!(r.wvo_std.iter().all(|s| *s > 0.0));
            assert_eq!(r.param_names, vec!["mu".to_string(), "tau".to_string()]);
        }
    }

    #[test]
    fn loo_rejects_single_group_data() {
        let fam = family_by_name("eight-schools").unwrap();
        let data = GroupedData::unlabeled(vec![ObservationSet::new(vec![Observation::with_aux(
            1.0, 9.0,
        )])
        .unwrap()])
        .unwrap();
        assert!(loo_cross_validation(fam.as_ref(), &data, &quick_config(), &[]).is_err());
    }

    #[test]
    fn evenly_spaced_folds_cover_range() {
        assert_eq!(evenly_spaced_folds(71, 5), vec![0, 14, 28, 42, 56]);
        assert_eq!(evenly_spaced_folds(8, 8), (0..8).collect::<Vec<_>>());
        assert_eq!(evenly_spaced_folds(3, 10), vec![0, 1, 2]);
    }

    #[test]
    fn loo_is_deterministic() {
        let fam = family_by_name("eight-schools").unwrap();
        let data = two_group_schools();
        let cfg = quick_config();
        let a = loo_cross_validation(fam.as_ref(), &data, &cfg, &[0]).unwrap();
        let b = loo_cross_validation(fam.as_ref(), &data, &cfg, &[0]).unwrap();
        assert_eq!(a[0].wvo_mean, b[0].wvo_mean);
        assert_eq!(a[0].objective, b[0].objective);
    }
}
