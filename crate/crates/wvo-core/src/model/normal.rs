use rand_distr::{Distribution, StandardNormal};

use super::{LatentPoint, LatentSpec, ModelFamily, Observation};
use crate::error::Result;
use crate::math::normal_logpdf;
use crate::rng::Prng;

/// y ~ Normal(mu, sigma) with the flat improper prior p(mu, log sigma) ∝ 1.
///
/// Internal coordinates are (mu, log sigma), so the prior is a constant and
/// log_prior returns 0 up to that constant.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalNoninformative;

const SPEC: [LatentSpec; 2] = [LatentSpec::identity("mu"), LatentSpec::exp("log_sigma", "sigma")];

impl ModelFamily for NormalNoninformative {
    fn name(&self) -> &'static str {
        "normal-noninformative"
    }

    fn latent_spec(&self) -> &[LatentSpec] {
        &SPEC
    }

    fn log_prior(&self, _x: &LatentPoint) -> f64 {
        0.0
    }

    fn init_latent(&self, rng: &mut Prng) -> LatentPoint {
        let mu: f64 = StandardNormal.sample(rng);
        let log_sigma: f64 = StandardNormal.sample(rng);
        LatentPoint::new(vec![mu, 0.3 * log_sigma]).unwrap()
    }

    fn init_latent_for(&self, data: &super::DataSet, rng: &mut Prng) -> LatentPoint {
        let ys: Vec<f64> = match data {
            super::DataSet::Flat(obs) => obs.iter().map(|y| y.value).collect(),
            super::DataSet::Grouped(_) => return self.init_latent(rng),
        };
        if ys.len() < 2 {
            return self.init_latent(rng);
        }
        let m = crate::math::mean(&ys);
        let sd = crate::math::std_dev(&ys).max(1e-3);
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        LatentPoint::new(vec![m + 0.2 * sd * a, sd.ln() + 0.2 * b]).unwrap()
    }

    fn validate_observation(&self, _y: &Observation) -> Result<()> {
        Ok(())
    }

    fn obs_logpdf(&self, y: &Observation, x: &LatentPoint) -> f64 {
        let mu = x.values()[0];
        let sigma = x.values()[1].exp();
        normal_logpdf(y.value, mu, sigma)
    }

    fn sample_obs(&self, x: &LatentPoint, rng: &mut Prng) -> Observation {
        let mu = x.values()[0];
        let sigma = x.values()[1].exp();
        let z: f64 = StandardNormal.sample(rng);
        Observation::plain(mu + sigma * z)
    }
}
