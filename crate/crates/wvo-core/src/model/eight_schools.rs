use rand_distr::{Distribution, StandardNormal};

use super::{GroupDraw, GroupLatent, LatentPoint, LatentSpec, ModelFamily, Observation};
use crate::error::{Error, Result};
use crate::math::{half_cauchy_logpdf, normal_logpdf};
use crate::rng::Prng;

/// mu ~ Normal(0, 5); tau ~ HalfCauchy(0, 5); nu_k ~ Normal(mu, tau);
/// y_k ~ Normal(nu_k, sigma_k) with sigma_k a known per-observation constant.
///
/// Hyperparameters are carried as (mu, log tau). Group parameters are
/// sampled non-centered: raw ~ N(0, 1), nu = mu + tau * raw.
#[derive(Debug, Clone, Copy, Default)]
pub struct EightSchools;

const SPEC: [LatentSpec; 2] = [LatentSpec::identity("mu"), LatentSpec::exp("log_tau", "tau")];

impl ModelFamily for EightSchools {
    fn name(&self) -> &'static str {
        "eight-schools"
    }

    fn latent_spec(&self) -> &[LatentSpec] {
        &SPEC
    }

    fn group_dim(&self) -> usize {
        1
    }

    fn log_prior(&self, x: &LatentPoint) -> f64 {
        let mu = x.values()[0];
        let log_tau = x.values()[1];
        let tau = log_tau.exp();
        // HalfCauchy density on tau plus the log-coordinate Jacobian.
        normal_logpdf(mu, 0.0, 5.0) + half_cauchy_logpdf(tau, 5.0) + log_tau
    }

    fn init_latent(&self, rng: &mut Prng) -> LatentPoint {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        LatentPoint::new(vec![a, 0.3 * b]).unwrap()
    }

    fn init_latent_for(&self, data: &super::DataSet, rng: &mut Prng) -> LatentPoint {
        let mut ys = Vec::new();
        if let super::DataSet::Grouped(g) = data {
            for group in g.groups() {
                for y in group.iter() {
                    ys.push(y.value);
                }
            }
        }
        if ys.len() < 2 {
            return self.init_latent(rng);
        }
        let m = crate::math::mean(&ys);
        let sd = crate::math::std_dev(&ys).max(1.0);
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        LatentPoint::new(vec![m + 0.5 * a, (0.5 * sd).ln() + 0.2 * b]).unwrap()
    }

    fn validate_observation(&self, y: &Observation) -> Result<()> {
        match y.aux {
            Some(sigma) if sigma > 0.0 => Ok(()),
            Some(sigma) => Err(Error::data(format!("sigma must be positive, got {sigma}"))),
            None => Err(Error::data("eight-schools observations need a sigma column")),
        }
    }

    fn group_logpdf(&self, z: &GroupLatent, x: &LatentPoint) -> f64 {
        let mu = x.values()[0];
        let tau = x.values()[1].exp();
        normal_logpdf(z.values[0], mu, tau)
    }

    fn sample_group(&self, x: &LatentPoint, rng: &mut Prng) -> GroupDraw {
        let mu = x.values()[0];
        let tau = x.values()[1].exp();
        let raw: f64 = StandardNormal.sample(rng);
        GroupDraw::exact(GroupLatent::scalar(mu + tau * raw))
    }

    fn group_obs_logpdf(&self, y: &Observation, z: &GroupLatent) -> f64 {
        let sigma = y.aux.unwrap_or(f64::NAN);
        normal_logpdf(y.value, z.values[0], sigma)
    }

    fn sample_group_obs(&self, z: &GroupLatent, like: &Observation, rng: &mut Prng) -> Observation {
        let sigma = like.aux.expect("eight-schools observations carry sigma");
        let raw: f64 = StandardNormal.sample(rng);
        Observation::with_aux(z.values[0] + sigma * raw, sigma)
    }

    fn group_raw_init(&self, _x: &LatentPoint, rng: &mut Prng) -> Vec<f64> {
        vec![StandardNormal.sample(rng)]
    }

    fn group_raw_logprior(&self, _x: &LatentPoint, raw: &[f64]) -> f64 {
        normal_logpdf(raw[0], 0.0, 1.0)
    }

    fn group_from_raw(&self, x: &LatentPoint, raw: &[f64]) -> GroupLatent {
        let mu = x.values()[0];
        let tau = x.values()[1].exp();
        GroupLatent::scalar(mu + tau * raw[0])
    }
}
