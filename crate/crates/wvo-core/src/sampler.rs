//! Adaptive random-walk Metropolis over a generic log-density target,
//! posterior sample containers, effective-sample-size diagnostics, and the
//! per-sample group marginal likelihood table for multi-level objectives.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{DataSet, GroupedData, LatentPoint, ModelFamily};
use crate::par;
use crate::rng::{stream, Prng};

/// Tuning knobs for one inference run. `seed` keys every rng stream, so a
/// given (target, config) pair reproduces bit-identical samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Retained draws after warmup and thinning (total across chains).
    pub n_samples: usize,
    pub warmup: usize,
    pub thin: usize,
    pub n_chains: usize,
    /// Defaults to 0.44 for one-dimensional targets and 0.234 otherwise.
    pub target_accept: Option<f64>,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_samples: 5000,
            warmup: 1000,
            thin: 10,
            n_chains: 1,
            target_accept: None,
            init_scale: 0.5,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 100 {
            return Err(Error::usage("n_samples must be at least 100"));
        }
        if self.thin < 1 {
            return Err(Error::usage("thin must be at least 1"));
        }
        if self.n_chains < 1 {
            return Err(Error::usage("n_chains must be at least 1"));
        }
        if let Some(t) = self.target_accept {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::usage("target acceptance must lie in (0, 1)"));
            }
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::usage("init_scale must be positive"));
        }
        Ok(())
    }

    fn target_for_dim(&self, dim: usize) -> f64 {
        self.target_accept.unwrap_or(if dim == 1 { 0.44 } else { 0.234 })
    }
}

/// Snapshot of the per-dimension proposal scales at one iteration;
/// post-warmup snapshots must all be equal (adaptation freeze).
#[derive(Debug, Clone)]
pub struct ScaleCheckpoint {
    pub iteration: usize,
    pub during_warmup: bool,
    pub scales: Vec<f64>,
}

/// Retained posterior draws (hyperparameter block only for multi-level
/// targets), stored row-major in internal coordinates.
#[derive(Debug, Clone)]
pub struct PosteriorSamples {
    names: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    pub acceptance_rate: f64,
    pub ess: Vec<f64>,
    pub scale_checkpoints: Vec<ScaleCheckpoint>,
}

impl PosteriorSamples {
    /// Wraps an existing draw matrix (used for exact conjugate samples and
    /// for deserialized sample files).
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::usage("sample matrix must be nonempty"));
        }
        let dim = names.len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::usage("sample row width must match names"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::usage("sample rows must be finite"));
            }
            data.extend_from_slice(row);
        }
        let mut out = PosteriorSamples {
            names,
            data,
            dim,
            acceptance_rate: f64::NAN,
            ess: Vec::new(),
            scale_checkpoints: Vec::new(),
        };
        out.ess = ess(&out);
        Ok(out)
    }

    pub fn n_samples(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.dim..(s + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_samples()).map(|s| self.data[s * self.dim + j]).collect()
    }

    pub fn latent_point(&self, s: usize) -> LatentPoint {
        LatentPoint::new(self.row(s).to_vec()).expect("stored rows are finite")
    }

    /// Transforms each internal-coordinate row into the family's natural
    /// parameters, for reporting and posterior comparison.
    pub fn to_natural(&self, family: &dyn ModelFamily) -> Result<PosteriorSamples> {
        if self.dim != family.latent_dim() {
            return Err(Error::usage("sample dimension does not match family"));
        }
        let rows: Vec<Vec<f64>> =
            (0..self.n_samples()).map(|s| family.to_natural(&self.latent_point(s))).collect();
        let mut out = PosteriorSamples::from_rows(family.natural_names(), rows)?;
        out.acceptance_rate = self.acceptance_rate;
        Ok(out)
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        math::mean(&self.column(j))
    }

    pub fn column_std(&self, j: usize) -> f64 {
        math::std_dev(&self.column(j))
    }
}

/// A log-density the sampler can walk over. The first `exposed_dim`
/// coordinates form the reported block.
pub trait Target: Sync {
    fn dim(&self) -> usize;
    fn names(&self) -> Vec<String>;
    fn exposed_dim(&self) -> usize {
        self.dim()
    }
    fn log_density(&self, state: &[f64]) -> f64;
    fn init(&self, rng: &mut Prng) -> Vec<f64>;
}

/// The joint density of a family and its data: p(x) p(y|x) for flat models,
/// p(x) p(z_k|x) p(y_k|z_k) with group latents in raw coordinates for
/// multi-level models.
pub struct ModelTarget<'a> {
    family: &'a dyn ModelFamily,
    data: &'a DataSet,
}

impl<'a> ModelTarget<'a> {
    pub fn new(family: &'a dyn ModelFamily, data: &'a DataSet) -> Result<Self> {
        family.check_data(data)?;
        Ok(ModelTarget { family, data })
    }
}

impl Target for ModelTarget<'_> {
    fn dim(&self) -> usize {
        match self.data {
            DataSet::Flat(_) => self.family.latent_dim(),
            DataSet::Grouped(g) => {
                self.family.latent_dim() + g.n_groups() * self.family.group_raw_dim()
            }
        }
    }

    fn names(&self) -> Vec<String> {
        let mut names = self.family.internal_names();
        if let DataSet::Grouped(g) = self.data {
            for label in g.labels() {
                for j in 0..self.family.group_raw_dim() {
                    names.push(format!("raw[{label}][{j}]"));
                }
            }
        }
        names
    }

    fn exposed_dim(&self) -> usize {
        self.family.latent_dim()
    }

    fn log_density(&self, state: &[f64]) -> f64 {
        let d = self.family.latent_dim();
        let x = match LatentPoint::new(state[..d].to_vec()) {
            Ok(x) => x,
            Err(_) => return f64::NEG_INFINITY,
        };
        let mut lp = self.family.log_prior(&x);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        match self.data {
            DataSet::Flat(obs) => {
                for y in obs.iter() {
                    lp += self.family.obs_logpdf(y, &x);
                    if lp == f64::NEG_INFINITY {
                        return lp;
                    }
                }
            }
            DataSet::Grouped(g) => {
                let rd = self.family.group_raw_dim();
                for (k, group) in g.groups().iter().enumerate() {
                    let raw = &state[d + k * rd..d + (k + 1) * rd];
                    lp += self.family.group_raw_logprior(&x, raw);
                    if lp == f64::NEG_INFINITY {
                        return lp;
                    }
                    let z = self.family.group_from_raw(&x, raw);
                    for y in group.iter() {
                        lp += self.family.group_obs_logpdf(y, &z);
                    }
                    if lp == f64::NEG_INFINITY {
                        return lp;
                    }
                }
            }
        }
        lp
    }

    fn init(&self, rng: &mut Prng) -> Vec<f64> {
        let x = self.family.init_latent_for(self.data, rng);
        let mut state = x.values().to_vec();
        if let DataSet::Grouped(g) = self.data {
            for group in g.groups() {
                state.extend(self.family.group_raw_init_for(&x, group, rng));
            }
        }
        state
    }
}

/// Runs adaptive random-walk Metropolis on a family + dataset and returns
/// the (hyper)parameter draws.
pub fn run_mh(
    family: &dyn ModelFamily,
    data: &DataSet,
    config: &SamplerConfig,
) -> Result<PosteriorSamples> {
    let target = ModelTarget::new(family, data)?;
    run_mh_target(&target, config)
}

/// Runs the sampler on any target. Chains execute independently on split
/// rng streams and their retained draws are concatenated in chain order.
pub fn run_mh_target<T: Target>(target: &T, config: &SamplerConfig) -> Result<PosteriorSamples> {
    config.validate()?;
    let per_chain = config.n_samples.div_ceil(config.n_chains);
    let chains: Vec<Result<ChainOutput>> = par::map_indexed(config.n_chains, |c| {
        run_chain(target, config, per_chain, c as u64)
    });

    let mut data = Vec::with_capacity(config.n_samples * target.exposed_dim());
    let mut acc = 0.0;
    let mut checkpoints = Vec::new();
    for chain in chains {
        let chain = chain?;
        data.extend(chain.draws);
        acc += chain.acceptance_rate;
        if checkpoints.is_empty() {
            checkpoints = chain.scale_checkpoints;
        }
    }
    data.truncate(config.n_samples * target.exposed_dim());

    let mut samples = PosteriorSamples {
        names: target.names()[..target.exposed_dim()].to_vec(),
        data,
        dim: target.exposed_dim(),
        acceptance_rate: acc / config.n_chains as f64,
        ess: Vec::new(),
        scale_checkpoints: checkpoints,
    };
    samples.ess = ess(&samples);
    Ok(samples)
}

struct ChainOutput {
    draws: Vec<f64>,
    acceptance_rate: f64,
    scale_checkpoints: Vec<ScaleCheckpoint>,
}

fn run_chain<T: Target>(
    target: &T,
    config: &SamplerConfig,
    n_keep: usize,
    chain_id: u64,
) -> Result<ChainOutput> {
    let mut rng = stream(config.seed, chain_id);
    let d = target.dim();
    let accept_goal = config.target_for_dim(d);

    let mut state = target.init(&mut rng);
    let mut lp = target.log_density(&state);
    if !lp.is_finite() {
        return Err(Error::Init(format!(
            "log density at the initial point is {lp}; check data/model compatibility"
        )));
    }

    // Global scale factor times per-dimension spread estimates. Both adapt
    // during warmup only.
    let mut log_lambda = (2.38 / (d as f64).sqrt()).ln();
    let mut spread = vec![config.init_scale; d];
    let mut welford_mean = vec![0.0; d];
    let mut welford_m2 = vec![0.0; d];
    let mut welford_n = 0.0f64;

    let mut proposal = vec![0.0; d];
    let mut checkpoints = Vec::new();
    let mut warmup_accepts = 0usize;

    let checkpoint_every = (config.warmup / 10).max(1);

    for t in 0..config.warmup {
        let lambda = log_lambda.exp();
        for j in 0..d {
            let eps: f64 = StandardNormal.sample(&mut rng);
            proposal[j] = state[j] + lambda * spread[j] * eps;
        }
        let lp_new = target.log_density(&proposal);
        let log_ratio = lp_new - lp;
        let accept_prob = if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() };
        if rng.random::<f64>() < accept_prob {
            state.copy_from_slice(&proposal);
            lp = lp_new;
            warmup_accepts += 1;
        }

        // Robbins-Monro step on the global factor.
        let gain = (t as f64 + 1.0).powf(-0.6);
        log_lambda += gain * (accept_prob - accept_goal);

        // Running per-dimension spread from the warmup trajectory.
        welford_n += 1.0;
        for j in 0..d {
            let delta = state[j] - welford_mean[j];
            welford_mean[j] += delta / welford_n;
            welford_m2[j] += delta * (state[j] - welford_mean[j]);
        }
        if t >= 50 {
            for j in 0..d {
                let var = welford_m2[j] / (welford_n - 1.0);
                if var > 0.0 {
                    spread[j] = var.sqrt().max(config.init_scale * 1e-6);
                }
            }
        }

        if t % checkpoint_every == 0 {
            checkpoints.push(ScaleCheckpoint {
                iteration: t,
                during_warmup: true,
                scales: effective_scales(log_lambda, &spread),
            });
        }
    }

    if config.warmup >= 50 && warmup_accepts == 0 {
        return Err(Error::Divergence(format!(
            "no proposal accepted in {} warmup iterations (dim {}, lambda {:.3e}); the chain cannot move",
            config.warmup,
            d,
            log_lambda.exp()
        )));
    }

    // Frozen post-warmup kernel: a valid Markov chain from here on.
    let lambda = log_lambda.exp();
    let scales: Vec<f64> = spread.iter().map(|s| lambda * s).collect();
    checkpoints.push(ScaleCheckpoint {
        iteration: config.warmup,
        during_warmup: false,
        scales: scales.clone(),
    });

    let total = n_keep * config.thin;
    let mut draws = Vec::with_capacity(n_keep * target.exposed_dim());
    let mut accepts = 0usize;
    let checkpoint_every = (total / 10).max(1);

    for t in 0..total {
        for j in 0..d {
            let eps: f64 = StandardNormal.sample(&mut rng);
            proposal[j] = state[j] + scales[j] * eps;
        }
        let lp_new = target.log_density(&proposal);
        let log_ratio = lp_new - lp;
        let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
        if accept {
            state.copy_from_slice(&proposal);
            lp = lp_new;
            accepts += 1;
        }
        if (t + 1) % config.thin == 0 {
            draws.extend_from_slice(&state[..target.exposed_dim()]);
        }
        if t % checkpoint_every == 0 {
            checkpoints.push(ScaleCheckpoint {
                iteration: config.warmup + t,
                during_warmup: false,
                scales: scales.clone(),
            });
        }
    }

    Ok(ChainOutput {
        draws,
        acceptance_rate: accepts as f64 / total.max(1) as f64,
        scale_checkpoints: checkpoints,
    })
}

fn effective_scales(log_lambda: f64, spread: &[f64]) -> Vec<f64> {
    let lambda = log_lambda.exp();
    spread.iter().map(|s| lambda * s).collect()
}

/// Effective sample size per dimension via Geyer's initial positive
/// sequence truncation of the autocorrelation sum.
pub fn ess(samples: &PosteriorSamples) -> Vec<f64> {
    (0..samples.dim()).map(|j| ess_series(&samples.column(j))).collect()
}

/// ESS of a single scalar series.
pub fn ess_series(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = math::mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let var: f64 = centered.iter().map(|c| c * c).sum::<f64>() / n as f64;
    if var <= 0.0 || !var.is_finite() {
        return 1.0; // constant chain carries one sample of information
    }
    let autocorr = |k: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..n - k {
            acc += centered[i] * centered[i + k];
        }
        acc / (n as f64 * var)
    };

    let mut tau = 1.0; // 1 + 2 sum rho_k, accumulated in Geyer pairs
    let mut k = 1;
    while k + 1 < n {
        let pair = autocorr(k) + autocorr(k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    (n as f64 / tau).min(n as f64)
}

/// Matrix of estimated log p(y*_k | x*_s), computed once per (samples,
/// data) pair and reused across every optimizer iteration.
#[derive(Debug, Clone)]
pub struct GroupLikTable {
    data: Vec<f64>,
    n_groups: usize,
    pub t_draws: usize,
    /// Entries where every forward draw had zero likelihood; raise T if > 0.
    pub n_neg_inf: usize,
}

impl GroupLikTable {
    pub fn from_rows(rows: Vec<Vec<f64>>, t_draws: usize) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::usage("group likelihood table must be nonempty"));
        }
        let n_groups = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * n_groups);
        let mut n_neg_inf = 0;
        for row in &rows {
            if row.len() != n_groups {
                return Err(Error::usage("ragged group likelihood table"));
            }
            for &v in row {
                if v.is_nan() {
                    return Err(Error::usage("NaN in group likelihood table"));
                }
                if v == f64::NEG_INFINITY {
                    n_neg_inf += 1;
                }
                data.push(v);
            }
        }
        Ok(GroupLikTable { data, n_groups, t_draws, n_neg_inf })
    }

    pub fn n_samples(&self) -> usize {
        self.data.len() / self.n_groups
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.n_groups..(s + 1) * self.n_groups]
    }

    pub fn entry(&self, s: usize, k: usize) -> f64 {
        self.data[s * self.n_groups + k]
    }

    /// base[s] = sum_k log p(y*_k | x*_s)
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|s| self.row(s).iter().sum()).collect()
    }
}

/// Estimates log p(y*_k | x*_s) for every posterior sample and group by
/// forward sampling T group-parameter draws per entry. Weight-independent;
/// rows run on split rng streams keyed by (seed, s).
pub fn estimate_group_logliks(
    family: &dyn ModelFamily,
    data: &GroupedData,
    samples: &PosteriorSamples,
    t_draws: usize,
    seed: u64,
) -> Result<GroupLikTable> {
    if !family.is_multi_level() {
        return Err(Error::usage(format!(
            "{} is single-level; the group marginal estimator does not apply",
            family.name()
        )));
    }
    if t_draws < 1 {
        return Err(Error::usage("forward draw count T must be at least 1"));
    }
    if samples.dim() != family.latent_dim() {
        return Err(Error::usage("sample dimension does not match family"));
    }

    let rows: Vec<Vec<f64>> = par::map_indexed(samples.n_samples(), |s| {
        let mut rng = stream(seed, s as u64);
        let x = samples.latent_point(s);
        data.groups()
            .iter()
            .map(|group| family.group_marginal_loglik(&x, group, t_draws, &mut rng))
            .collect()
    });
    GroupLikTable::from_rows(rows, t_draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        family_by_name, GroupedData, LatentPoint, Observation, ObservationSet,
    };
    use crate::rng::seeded;
    use rand_distr::Normal;

    struct FlatTarget {
        dim: usize,
    }

    impl Target for FlatTarget {
        fn dim(&self) -> usize {
            self.dim
        }
        fn names(&self) -> Vec<String> {
            (0..self.dim).map(|j| format!("x{j}")).collect()
        }
        fn log_density(&self, _state: &[f64]) -> f64 {
            0.0
        }
        fn init(&self, _rng: &mut Prng) -> Vec<f64> {
            vec![0.0; self.dim]
        }
    }

    struct NanInitTarget;

    impl Target for NanInitTarget {
        fn dim(&self) -> usize {
            1
        }
        fn names(&self) -> Vec<String> {
            vec!["x".into()]
        }
        fn log_density(&self, _state: &[f64]) -> f64 {
            f64::NEG_INFINITY
        }
        fn init(&self, _rng: &mut Prng) -> Vec<f64> {
            vec![0.0]
        }
    }

    #[test]
    fn flat_target_accepts_everything() {
        // no data, flat density: pure random walk
        let cfg = SamplerConfig { n_samples: 100, warmup: 0, thin: 1, ..Default::default() };
        let samples = run_mh_target(&FlatTarget { dim: 1 }, &cfg).unwrap();
        assert_eq!(samples.n_samples(), 100);
        assert!((samples.acceptance_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_initial_density_is_an_init_error() {
        let cfg = SamplerConfig { n_samples: 100, warmup: 10, thin: 1, ..Default::default() };
        match run_mh_target(&NanInitTarget, &cfg) {
            Err(Error::Init(_)) => {}
            other => panic!("expected init error, got {other:?}"),
        }
    }

    #[test]
    fn identical_config_is_bit_identical() {
        let fam = family_by_name("beta-bernoulli").unwrap();
        let data = DataSet::Flat(
            ObservationSet::from_values(&[1.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap(),
        );
        let cfg = SamplerConfig { n_samples: 300, warmup: 200, thin: 2, seed: 9, ..Default::default() };
        let a = run_mh(fam.as_ref(), &data, &cfg).unwrap();
        let b = run_mh(fam.as_ref(), &data, &cfg).unwrap();
        assert_eq!(a.n_samples(), b.n_samples());
        for s in 0..a.n_samples() {
            assert_eq!(a.row(s), b.row(s));
        }
    }

    #[test]
    fn scales_do_not_move_after_warmup() {
        let fam = family_by_name("normal-noninformative").unwrap();
        let data = DataSet::Flat(ObservationSet::from_values(&[0.1, -0.4, 1.2, 0.8]).unwrap());
        let cfg = SamplerConfig { n_samples: 200, warmup: 300, thin: 2, seed: 4, ..Default::default() };
        let samples = run_mh(fam.as_ref(), &data, &cfg).unwrap();
        let frozen: Vec<&ScaleCheckpoint> =
            samples.scale_checkpoints.iter().filter(|c| !c.during_warmup).collect();
        assert!(frozen.len() >= 2);
        for c in &frozen {
            assert_eq!(c.scales, frozen[0].scales);
        }
        // and warmup did adapt away from the initial value somewhere
        let warm: Vec<&ScaleCheckpoint> =
            samples.scale_checkpoints.iter().filter(|c| c.during_warmup).collect();
        assert!(warm.iter().any(|c| c.scales != warm[0].scales));
    }

    #[test]
    fn ess_white_noise_close_to_n() {
        let mut rng = seeded(2);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = ess_series(&xs);
        assert!((e - 10_000.0).abs() < 1_000.0, "ess {e}");
    }

    #[test]
    fn ess_constant_chain_is_degenerate() {
        let xs = vec![3.0; 500];
        assert!(ess_series(&xs) <= 2.0);
    }

    #[test]
    fn ess_ar1_matches_formula() {
        // AR(1) with phi = 0.5: ESS/n -> (1-phi)/(1+phi) = 1/3
        let mut rng = seeded(77);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 10_000;
        let mut xs = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            prev = 0.5 * prev + normal.sample(&mut rng);
            xs.push(prev);
        }
        let ratio = ess_series(&xs) / n as f64;
        assert!((ratio - 1.0 / 3.0).abs() < 0.15 / 3.0, "ratio {ratio}");
    }

    #[test]
    fn group_table_t1_is_single_draw() {
        let fam = family_by_name("eight-schools").unwrap();
        let data = GroupedData::unlabeled(vec![ObservationSet::new(vec![Observation::with_aux(
            10.0, 10.0,
        )])
        .unwrap()])
        .unwrap();
        let samples =
            PosteriorSamples::from_rows(fam.internal_names(), vec![vec![10.0, -40.0]]).unwrap();
        let table = estimate_group_logliks(fam.as_ref(), &data, &samples, 1, 0).unwrap();
        assert_eq!(table.n_samples(), 1);
        assert_eq!(table.n_groups(), 1);
        // tau -> 0 collapses nu to mu: entry = log Normal(10; 10, 10)
        let expected = math::normal_logpdf(10.0, 10.0, 10.0);
        assert!((table.entry(0, 0) - expected).abs() < 1e-9);
    }

    #[test]
    fn group_table_rejects_bad_usage() {
        let single = family_by_name("beta-bernoulli").unwrap();
        let data = GroupedData::unlabeled(vec![ObservationSet::from_values(&[1.0]).unwrap()])
            .unwrap();
        let samples = PosteriorSamples::from_rows(vec!["theta".into()], vec![vec![0.5]]).unwrap();
        assert!(estimate_group_logliks(single.as_ref(), &data, &samples, 10, 0).is_err());

        let multi = family_by_name("eight-schools").unwrap();
        let gdata = GroupedData::unlabeled(vec![ObservationSet::new(vec![Observation::with_aux(
            1.0, 9.0,
        )])
        .unwrap()])
        .unwrap();
        let hsamples =
            PosteriorSamples::from_rows(multi.internal_names(), vec![vec![0.0, 0.0]]).unwrap();
        assert!(estimate_group_logliks(multi.as_ref(), &gdata, &hsamples, 0, 0).is_err());
    }

    #[test]
    fn rats_single_group_marginal_matches_exact_integral() {
        // integral of (1-eta)^10 over Beta(1,1) draws of eta is 1/11
        let fam = family_by_name("rats-binomial").unwrap();
        let data = GroupedData::unlabeled(vec![ObservationSet::new(vec![Observation::with_aux(
            0.0, 10.0,
        )])
        .unwrap()])
        .unwrap();
        let samples =
            PosteriorSamples::from_rows(fam.internal_names(), vec![vec![0.0, 0.0]]).unwrap();
        let table = estimate_group_logliks(fam.as_ref(), &data, &samples, 100_000, 3).unwrap();
        let expected = (1.0f64 / 11.0).ln();
        assert!((table.entry(0, 0) - expected).abs() < 0.02, "got {}", table.entry(0, 0));
    }

    #[test]
    fn latent_point_roundtrip() {
        let samples =
            PosteriorSamples::from_rows(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0]])
                .unwrap();
        assert_eq!(samples.latent_point(0), LatentPoint::new(vec![1.0, 2.0]).unwrap());
    }
}
