use rand_distr::{Beta, Binomial, Distribution, StandardNormal};

use super::{GroupDraw, GroupLatent, LatentPoint, LatentSpec, ModelFamily, Observation};
use crate::error::{Error, Result};
use crate::math::{beta_logpdf, binomial_logpmf};
use crate::rng::Prng;

/// p(alpha, beta) ∝ (alpha + beta)^(-5/2); eta_k ~ Beta(alpha, beta);
/// y_k ~ Binomial(n_k, eta_k) with n_k a known trial count.
///
/// Hyperparameters are carried as (log alpha, log beta); group parameters
/// stay in their natural eta coordinate (the per-group data is informative
/// enough that the centered parameterization mixes fine).
#[derive(Debug, Clone, Copy, Default)]
pub struct RatsBinomial;

const SPEC: [LatentSpec; 2] =
    [LatentSpec::exp("log_alpha", "alpha"), LatentSpec::exp("log_beta", "beta")];

impl ModelFamily for RatsBinomial {
    fn name(&self) -> &'static str {
        "rats-binomial"
    }

    fn latent_spec(&self) -> &[LatentSpec] {
        &SPEC
    }

    fn group_dim(&self) -> usize {
        1
    }

    fn log_prior(&self, x: &LatentPoint) -> f64 {
        let log_alpha = x.values()[0];
        let log_beta = x.values()[1];
        let alpha = log_alpha.exp();
        let beta = log_beta.exp();
        -2.5 * (alpha + beta).ln() + log_alpha + log_beta
    }

    fn init_latent(&self, rng: &mut Prng) -> LatentPoint {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        LatentPoint::new(vec![0.3 * a, 0.3 * b]).unwrap()
    }

    fn init_latent_for(&self, data: &super::DataSet, rng: &mut Prng) -> LatentPoint {
        // moment-match a Beta to the smoothed per-group tumor rates
        let mut rates = Vec::new();
        if let super::DataSet::Grouped(g) = data {
            for group in g.groups() {
                for y in group.iter() {
                    if let Some(n) = y.aux {
                        rates.push((y.value + 0.5) / (n + 1.0));
                    }
                }
            }
        }
        if rates.len() < 2 {
            return self.init_latent(rng);
        }
        let m = crate::math::mean(&rates);
        let v = crate::math::std_dev(&rates).powi(2).max(1e-4);
        let conc = (m * (1.0 - m) / v - 1.0).clamp(2.0, 200.0);
        let jitter: f64 = StandardNormal.sample(rng);
        let jitter2: f64 = StandardNormal.sample(rng);
        LatentPoint::new(vec![
            (m * conc).ln() + 0.1 * jitter,
            ((1.0 - m) * conc).ln() + 0.1 * jitter2,
        ])
        .unwrap()
    }

    fn validate_observation(&self, y: &Observation) -> Result<()> {
        let n = y.aux.ok_or_else(|| Error::data("rats observations need a trial-count column"))?;
        if n < 1.0 || n.fract() != 0.0 {
            return Err(Error::data(format!("trial count must be a positive integer, got {n}")));
        }
        if y.value < 0.0 || y.value > n || y.value.fract() != 0.0 {
            return Err(Error::data(format!(
                "tumor count must be an integer in [0, {n}], got {}",
                y.value
            )));
        }
        Ok(())
    }

    fn group_logpdf(&self, z: &GroupLatent, x: &LatentPoint) -> f64 {
        let alpha = x.values()[0].exp();
        let beta = x.values()[1].exp();
        let eta = z.values[0];
        if eta <= 0.0 || eta >= 1.0 {
            return f64::NEG_INFINITY;
        }
        beta_logpdf(eta, alpha, beta)
    }

    fn sample_group(&self, x: &LatentPoint, rng: &mut Prng) -> GroupDraw {
        let alpha = x.values()[0].exp();
        let beta = x.values()[1].exp();
        let eta = Beta::new(alpha, beta).expect("positive shape parameters").sample(rng);
        // Clamp away from the boundary so downstream log densities stay finite.
        GroupDraw::exact(GroupLatent::scalar(eta.clamp(1e-12, 1.0 - 1e-12)))
    }

    fn group_obs_logpdf(&self, y: &Observation, z: &GroupLatent) -> f64 {
        let n = y.aux.unwrap_or(f64::NAN);
        if !n.is_finite() {
            return f64::NEG_INFINITY;
        }
        binomial_logpmf(y.value as u64, n as u64, z.values[0])
    }

    fn sample_group_obs(&self, z: &GroupLatent, like: &Observation, rng: &mut Prng) -> Observation {
        let n = like.aux.expect("rats observations carry a trial count") as u64;
        let draws = Binomial::new(n, z.values[0]).expect("eta in unit interval").sample(rng);
        Observation::with_aux(draws as f64, n as f64)
    }

    fn group_raw_init(&self, x: &LatentPoint, rng: &mut Prng) -> Vec<f64> {
        vec![self.sample_group(x, rng).value.values[0]]
    }

    fn group_raw_init_for(
        &self,
        _x: &LatentPoint,
        ys: &super::ObservationSet,
        rng: &mut Prng,
    ) -> Vec<f64> {
        let y = ys.get(0);
        let n = y.aux.unwrap_or(1.0);
        let rate = ((y.value + 0.5) / (n + 1.0)).clamp(1e-3, 1.0 - 1e-3);
        let jitter: f64 = StandardNormal.sample(rng);
        vec![(rate * (1.0 + 0.05 * jitter)).clamp(1e-3, 1.0 - 1e-3)]
    }
}
