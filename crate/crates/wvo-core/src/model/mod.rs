//! Model-family abstraction and the built-in families.
//!
//! A family exposes log densities and forward samplers for one of two
//! structural shapes:
//!
//! * single-level: `p(x) p(y|x)`
//! * multi-level:  `p(x) p(z_k|x) p(y_k|z_k)` over groups `k`
//!
//! Latents live in internal unconstrained coordinates (positive quantities
//! are carried as logs); `log_prior` includes the transform Jacobians.

mod beta_bernoulli;
mod eight_schools;
mod normal;
mod normal_hyper;
mod rats;
mod types;

pub use beta_bernoulli::BetaBernoulli;
pub use eight_schools::EightSchools;
pub use normal::NormalNoninformative;
pub use normal_hyper::NormalHyper;
pub use rats::RatsBinomial;
pub use types::{DataSet, GroupLatent, GroupedData, LatentPoint, Observation, ObservationSet};

use crate::error::{Error, Result};
use crate::math::logsumexp_unchecked;
use crate::rng::Prng;

/// How one internal latent coordinate maps to its natural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// natural = internal
    Identity,
    /// natural = exp(internal)
    Exp,
}

impl Transform {
    pub fn to_natural(self, internal: f64) -> f64 {
        match self {
            Transform::Identity => internal,
            Transform::Exp => internal.exp(),
        }
    }

    pub fn to_internal(self, natural: f64) -> f64 {
        match self {
            Transform::Identity => natural,
            Transform::Exp => natural.ln(),
        }
    }

    /// log |d natural / d internal|
    pub fn log_jacobian(self, internal: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Exp => internal,
        }
    }
}

/// Name and transform of one latent dimension.
#[derive(Debug, Clone)]
pub struct LatentSpec {
    pub internal_name: &'static str,
    pub natural_name: &'static str,
    pub transform: Transform,
}

impl LatentSpec {
    pub const fn identity(name: &'static str) -> Self {
        LatentSpec { internal_name: name, natural_name: name, transform: Transform::Identity }
    }

    pub const fn exp(internal_name: &'static str, natural_name: &'static str) -> Self {
        LatentSpec { internal_name, natural_name, transform: Transform::Exp }
    }
}

/// A forward draw of a group parameter.
///
/// `log_weight` is the importance correction `log p(z|x) - log q(z|x)` when
/// the draw comes from a surrogate `q` instead of `p(z|x)` itself (only the
/// normal-hyperprior family needs this, for its improper component); exact
/// forward draws carry 0.
#[derive(Debug, Clone)]
pub struct GroupDraw {
    pub value: GroupLatent,
    pub log_weight: f64,
}

impl GroupDraw {
    pub fn exact(value: GroupLatent) -> Self {
        GroupDraw { value, log_weight: 0.0 }
    }
}

/// Log densities and forward samplers of one model family.
///
/// Families are immutable and shareable across threads; all randomness
/// flows through explicit rng handles.
pub trait ModelFamily: Send + Sync {
    fn name(&self) -> &'static str;

    /// Internal latent coordinates (hyperparameters for multi-level families).
    fn latent_spec(&self) -> &[LatentSpec];

    /// Dimension of the group parameter; 0 for single-level families.
    fn group_dim(&self) -> usize {
        0
    }

    fn latent_dim(&self) -> usize {
        self.latent_spec().len()
    }

    fn is_multi_level(&self) -> bool {
        self.group_dim() > 0
    }

    /// Log prior density in internal coordinates, Jacobians included.
    /// Out-of-support points yield -inf, never NaN. Improper priors are
    /// represented up to an additive constant.
    fn log_prior(&self, x: &LatentPoint) -> f64;

    /// Starting point for inference, drawn near the prior's center of mass.
    fn init_latent(&self, rng: &mut Prng) -> LatentPoint;

    /// Data-informed starting point (a jittered moment estimate), so chains
    /// do not spend their warmup crossing from the prior to the posterior
    /// bulk. Falls back to the prior-centered init.
    fn init_latent_for(&self, data: &DataSet, rng: &mut Prng) -> LatentPoint {
        let _ = data;
        self.init_latent(rng)
    }

    /// Data-informed starting point for one group's raw coordinates.
    fn group_raw_init_for(
        &self,
        x: &LatentPoint,
        ys: &ObservationSet,
        rng: &mut Prng,
    ) -> Vec<f64> {
        let _ = ys;
        self.group_raw_init(x, rng)
    }

    /// Checks value and aux constraints for this family.
    fn validate_observation(&self, y: &Observation) -> Result<()>;

    // --- single-level surface ---

    fn obs_logpdf(&self, _y: &Observation, _x: &LatentPoint) -> f64 {
        panic!("{} is multi-level; use group_obs_logpdf", self.name());
    }

    fn sample_obs(&self, _x: &LatentPoint, _rng: &mut Prng) -> Observation {
        panic!("{} is multi-level; use sample_group", self.name());
    }

    // --- multi-level surface ---

    /// log p(z|x); improper components contribute 0.
    fn group_logpdf(&self, _z: &GroupLatent, _x: &LatentPoint) -> f64 {
        panic!("{} is single-level; it has no group parameters", self.name());
    }

    fn sample_group(&self, _x: &LatentPoint, _rng: &mut Prng) -> GroupDraw {
        panic!("{} is single-level; it has no group parameters", self.name());
    }

    fn group_obs_logpdf(&self, _y: &Observation, _z: &GroupLatent) -> f64 {
        panic!("{} is single-level; use obs_logpdf", self.name());
    }

    /// Draws an observation with the same aux fields as `like`.
    fn sample_group_obs(&self, _z: &GroupLatent, _like: &Observation, _rng: &mut Prng) -> Observation {
        panic!("{} is single-level; use sample_obs", self.name());
    }

    // --- sampler-internal group parameterization ---
    //
    // The joint sampler carries each group parameter as a raw vector. The
    // default is the centered passthrough (raw = z). Families whose p(z|x)
    // is a location-scale kernel override these with the non-centered form
    // (raw ~ N(0,1), z = loc + scale * raw) so the sampler does not have to
    // cross the small-tau funnel.

    fn group_raw_dim(&self) -> usize {
        self.group_dim()
    }

    fn group_raw_init(&self, x: &LatentPoint, rng: &mut Prng) -> Vec<f64> {
        let _ = x;
        let _ = rng;
        panic!("{} is single-level; it has no group parameters", self.name());
    }

    fn group_raw_logprior(&self, x: &LatentPoint, raw: &[f64]) -> f64 {
        self.group_logpdf(&GroupLatent::new(raw.to_vec()), x)
    }

    fn group_from_raw(&self, x: &LatentPoint, raw: &[f64]) -> GroupLatent {
        let _ = x;
        GroupLatent::new(raw.to_vec())
    }

    /// Monte Carlo estimate of log p(ys|x) by forward sampling z|x, with
    /// importance corrections applied for surrogate draws. Families with a
    /// partially analytic marginal may override.
    fn group_marginal_loglik(
        &self,
        x: &LatentPoint,
        ys: &ObservationSet,
        t_draws: usize,
        rng: &mut Prng,
    ) -> f64 {
        let mut terms = Vec::with_capacity(t_draws);
        for _ in 0..t_draws {
            let draw = self.sample_group(x, rng);
            let ll: f64 = ys.iter().map(|y| self.group_obs_logpdf(y, &draw.value)).sum();
            terms.push(ll + draw.log_weight);
        }
        logsumexp_unchecked(&terms) - (t_draws as f64).ln()
    }

    // --- reporting helpers ---

    fn internal_names(&self) -> Vec<String> {
        self.latent_spec().iter().map(|s| s.internal_name.to_string()).collect()
    }

    fn natural_names(&self) -> Vec<String> {
        self.latent_spec().iter().map(|s| s.natural_name.to_string()).collect()
    }

    fn to_natural(&self, x: &LatentPoint) -> Vec<f64> {
        self.latent_spec()
            .iter()
            .zip(x.values())
            .map(|(s, &v)| s.transform.to_natural(v))
            .collect()
    }

    /// Verifies data shape and every observation against this family.
    fn check_data(&self, data: &DataSet) -> Result<()> {
        match (self.is_multi_level(), data) {
            (false, DataSet::Flat(obs)) => {
                for y in obs.iter() {
                    self.validate_observation(y)?;
                }
                Ok(())
            }
            (true, DataSet::Grouped(g)) => {
                for group in g.groups() {
                    for y in group.iter() {
                        self.validate_observation(y)?;
                    }
                }
                Ok(())
            }
            (false, DataSet::Grouped(_)) => Err(Error::usage(format!(
                "{} is single-level but grouped data was provided",
                self.name()
            ))),
            (true, DataSet::Flat(_)) => Err(Error::usage(format!(
                "{} is multi-level but flat data was provided",
                self.name()
            ))),
        }
    }
}

impl std::fmt::Debug for dyn ModelFamily + '_ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ModelFamily({})", self.name())
    }
}

/// Sum of per-observation log likelihoods for a single-level family.
pub fn total_obs_loglik(
    family: &dyn ModelFamily,
    ys: &ObservationSet,
    x: &LatentPoint,
) -> Result<f64> {
    if family.is_multi_level() {
        return Err(Error::usage(format!(
            "total_obs_loglik applies to single-level families; {} is multi-level (use the group marginal estimator)",
            family.name()
        )));
    }
    if x.dim() != family.latent_dim() {
        return Err(Error::usage("latent dimension mismatch"));
    }
    Ok(ys.iter().map(|y| family.obs_logpdf(y, x)).sum())
}

/// Registered family names, addressable from the CLI.
pub const FAMILY_NAMES: [&str; 5] = [
    "beta-bernoulli",
    "normal-noninformative",
    "normal-hyperprior",
    "eight-schools",
    "rats-binomial",
];

pub fn family_by_name(name: &str) -> Result<Box<dyn ModelFamily>> {
    match name {
        "beta-bernoulli" => Ok(Box::new(BetaBernoulli::uniform())),
        "normal-noninformative" => Ok(Box::new(NormalNoninformative)),
        "normal-hyperprior" => Ok(Box::new(NormalHyper::default())),
        "eight-schools" => Ok(Box::new(EightSchools)),
        "rats-binomial" => Ok(Box::new(RatsBinomial)),
        other => Err(Error::usage(format!(
            "unknown model family '{}'; available: {}",
            other,
            FAMILY_NAMES.join(", ")
        ))),
    }
}
