use rand::Rng;

use super::{LatentPoint, LatentSpec, ModelFamily, Observation};
use crate::error::{Error, Result};
use crate::math::beta_logpdf;
use crate::rng::Prng;

/// theta ~ Beta(alpha, beta); y ~ Bernoulli(theta).
///
/// The single latent is carried in its natural coordinate theta; points
/// outside the open unit interval are out of support.
#[derive(Debug, Clone)]
pub struct BetaBernoulli {
    pub alpha: f64,
    pub beta: f64,
}

const SPEC: [LatentSpec; 1] = [LatentSpec::identity("theta")];

impl BetaBernoulli {
    pub fn new(alpha: f64, beta: f64) -> Self {
        assert!(alpha > 0.0 && beta > 0.0, "Beta prior parameters must be positive");
        BetaBernoulli { alpha, beta }
    }

    pub fn uniform() -> Self {
        BetaBernoulli::new(1.0, 1.0)
    }
}

impl ModelFamily for BetaBernoulli {
    fn name(&self) -> &'static str {
        "beta-bernoulli"
    }

    fn latent_spec(&self) -> &[LatentSpec] {
        &SPEC
    }

    fn log_prior(&self, x: &LatentPoint) -> f64 {
        let theta = x.values()[0];
        if theta <= 0.0 || theta >= 1.0 {
            return f64::NEG_INFINITY;
        }
        beta_logpdf(theta, self.alpha, self.beta)
    }

    fn init_latent(&self, rng: &mut Prng) -> LatentPoint {
        LatentPoint::new(vec![rng.random_range(0.25..0.75)]).unwrap()
    }

    fn init_latent_for(&self, data: &super::DataSet, rng: &mut Prng) -> LatentPoint {
        let obs = match data {
            super::DataSet::Flat(obs) => obs,
            super::DataSet::Grouped(_) => return self.init_latent(rng),
        };
        let s: f64 = obs.iter().map(|y| y.value).sum();
        let rate = (s + 1.0) / (obs.len() as f64 + 2.0);
        let jitter = rng.random_range(-0.05..0.05);
        LatentPoint::new(vec![(rate + jitter).clamp(0.01, 0.99)]).unwrap()
    }

    fn validate_observation(&self, y: &Observation) -> Result<()> {
        if y.value != 0.0 && y.value != 1.0 {
            return Err(Error::data(format!(
                "bernoulli observations must be 0 or 1, got {}",
                y.value
            )));
        }
        Ok(())
    }

    fn obs_logpdf(&self, y: &Observation, x: &LatentPoint) -> f64 {
        let theta = x.values()[0];
        if y.value == 1.0 {
            theta.ln()
        } else if y.value == 0.0 {
            (1.0 - theta).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample_obs(&self, x: &LatentPoint, rng: &mut Prng) -> Observation {
        let theta = x.values()[0];
        Observation::plain(if rng.random::<f64>() < theta { 1.0 } else { 0.0 })
    }
}
