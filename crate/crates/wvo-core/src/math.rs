//! Log-domain scalar math shared by models, objectives and diagnostics.

use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Numerically stable log(sum(exp(xs))) with max shift.
///
/// Returns -inf iff every entry is -inf. NaN input is a usage error;
/// +inf never occurs in this crate's log densities.
pub fn logsumexp(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::usage("logsumexp of empty slice"));
    }
    let mut max = f64::NEG_INFINITY;
    for &x in xs {
        if x.is_nan() {
            return Err(Error::usage("NaN passed to logsumexp"));
        }
        if x > max {
            max = x;
        }
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    Ok(max + sum.ln())
}

/// logsumexp over entries known to be NaN-free (hot paths after validation).
pub(crate) fn logsumexp_unchecked(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// softmax(xs) computed through the max shift; all -inf entries map to 0.
pub(crate) fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; xs.len()];
    }
    let mut out: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * LN_2PI
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * (1.0 + libm::erf((x - mean) / (sd * std::f64::consts::SQRT_2)))
}

/// Cauchy(0, scale) restricted to the positive half line.
pub fn half_cauchy_logpdf(x: f64, scale: f64) -> f64 {
    if x < 0.0 || scale <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = x / scale;
    (2.0 / std::f64::consts::PI).ln() - scale.ln() - (1.0 + z * z).ln()
}

pub fn beta_logpdf(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || a <= 0.0 || b <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if (x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0) {
        return f64::INFINITY.min(f64::MAX); // density pole; callers keep x in the open interval
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta_fn(a, b)
}

pub fn binomial_logpmf(y: u64, n: u64, p: f64) -> f64 {
    if y > n || !(0.0..=1.0).contains(&p) {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if y == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_choose(n, y) + y as f64 * p.ln() + (n - y) as f64 * (1.0 - p).ln()
}

pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 || shape <= 0.0 || rate <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_two_zeros_is_ln_two() {
        assert_eq!(logsumexp(&[0.0, 0.0]).unwrap(), 2.0f64.ln());
    }

    #[test]
    fn logsumexp_neg_inf_is_identity_element() {
        assert_eq!(logsumexp(&[f64::NEG_INFINITY, 0.0]).unwrap(), 0.0);
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn logsumexp_does_not_overflow() {
        let v = logsumexp(&[1000.0, 1000.0]).unwrap();
        assert!((v - (1000.0 + 2.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_rejects_nan() {
        assert!(logsumexp(&[f64::NAN, 0.0]).is_err());
        assert!(logsumexp(&[]).is_err());
    }

    #[test]
    fn logsumexp_shift_identity() {
        let xs = [-3.2, 0.4, 1.7, -11.0];
        let shifted: Vec<f64> = xs.iter().map(|x| x + 7.5).collect();
        let a = logsumexp(&xs).unwrap();
        let b = logsumexp(&shifted).unwrap();
        assert!((b - (a + 7.5)).abs() < 1e-12);
    }

    #[test]
    fn normal_logpdf_standard_at_zero() {
        assert!((normal_logpdf(0.0, 0.0, 1.0) + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn binomial_logpmf_matches_hand_value() {
        // 10 failures at rate 0.2: 10 * ln 0.8
        assert!((binomial_logpmf(0, 10, 0.2) - 10.0 * 0.8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn beta_logpdf_uniform_is_zero() {
        assert_eq!(beta_logpdf(0.5, 1.0, 1.0), 0.0);
    }

    #[test]
    fn half_cauchy_integrates_to_one_on_half_line() {
        // crude trapezoid over [0, 2000] with scale 5
        let n = 2_000_000;
        let h = 2000.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let x = i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * half_cauchy_logpdf(x, 5.0).exp();
        }
        acc *= h;
        assert!((acc - 1.0).abs() < 2e-3, "integral {acc}");
    }

    #[test]
    fn softmax_sums_to_one_and_ignores_neg_inf() {
        let p = softmax(&[0.0, f64::NEG_INFINITY, 1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
    }
}
