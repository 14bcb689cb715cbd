//! Closed-form bound calculators tying audit sample sizes, channel noise and
//! representation information to certificate behaviour.

use crate::audit::MiEstimate;
use crate::error::{Error, Result};

/// Probability that `n` i.i.d. audit samples all miss the unfairness of a
/// representation with chi-square information `mi`: `(1 - 1/I)^n`. Divergent
/// information drives the bound to 1 (certification can fail at any n).
pub fn thm1_lower_bound(n: u64, mi: MiEstimate) -> Result<f64> {
    if n == 0 {
        return Err(Error::argument("n must be at least 1"));
    }
    match mi {
        MiEstimate::Divergent => Ok(1.0),
        MiEstimate::Finite(i) => {
            if !(i >= 1.0) {
                return Err(Error::argument(format!(
                    "chi-square information must be >= 1, got {i}"
                )));
            }
            Ok((1.0 - 1.0 / i).powf(n as f64))
        }
    }
}

/// Largest chi-square information compatible with failure probability
/// `eps` at sample size `n`: `1 / (1 - eps^(1/n))`. Inverse of
/// `thm1_lower_bound` in its information argument.
pub fn cor_rates_mi_cap(eps: f64, n: u64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::argument(format!("eps must lie in (0,1), got {eps}")));
    }
    if n == 0 {
        return Err(Error::argument("n must be at least 1"));
    }
    Ok(1.0 / (1.0 - eps.powf(1.0 / n as f64)))
}

/// Expected certificate error rate from per-group sample sizes and
/// conditional chi-square informations:
/// `2 (sqrt(I0/n0) + sqrt(I1/n1))`.
pub fn thm2_rate_bound(n0: u64, n1: u64, i0: f64, i1: f64) -> Result<f64> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::argument("group sizes must be at least 1"));
    }
    if i0 < 0.0 || i1 < 0.0 || !i0.is_finite() || !i1.is_finite() {
        return Err(Error::argument("informations must be finite and non-negative"));
    }
    Ok(2.0 * ((i0 / n0 as f64).sqrt() + (i1 / n1 as f64).sqrt()))
}

/// Noise-channel information cap: conditional chi-square information through
/// an additive Gaussian channel is at most `exp(t_inf^2 / sigma^2)` where
/// `t_inf` bounds the encoder output norm.
pub fn thm3_mi_cap(t_inf: f64, sigma: f64) -> Result<f64> {
    if t_inf < 0.0 || !t_inf.is_finite() {
        return Err(Error::argument("t_inf must be finite and non-negative"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::argument("sigma must be positive"));
    }
    Ok((t_inf * t_inf / (sigma * sigma)).exp())
}

/// Rate bound with the channel cap substituted into the per-group rate:
/// `2 exp(t_inf^2 / (2 sigma^2)) (n0^{-1/2} + n1^{-1/2})`.
pub fn thm3_rate_bound(t_inf: f64, sigma: f64, n0: u64, n1: u64) -> Result<f64> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::argument("group sizes must be at least 1"));
    }
    let cap = thm3_mi_cap(t_inf, sigma)?;
    Ok(2.0 * cap.sqrt() * ((n0 as f64).powf(-0.5) + (n1 as f64).powf(-0.5)))
}

/// Mean-squared-error bound for the Monte-Carlo parity loss estimator:
/// `(8 t_inf^2 + 4 sigma^2) / (sigma^2 n m)`.
pub fn mc_mse_bound(t_inf: f64, sigma: f64, n: u64, m: u64) -> Result<f64> {
    if t_inf < 0.0 || !t_inf.is_finite() {
        return Err(Error::argument("t_inf must be finite and non-negative"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::argument("sigma must be positive"));
    }
    if n == 0 || m == 0 {
        return Err(Error::argument("n and m must be at least 1"));
    }
    Ok((8.0 * t_inf * t_inf + 4.0 * sigma * sigma) / (sigma * sigma * n as f64 * m as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thm1_examples() {
        assert_eq!(thm1_lower_bound(5, MiEstimate::Finite(1.0)).unwrap(), 0.0);
        assert_eq!(thm1_lower_bound(3, MiEstimate::Divergent).unwrap(), 1.0);
        let v = thm1_lower_bound(2, MiEstimate::Finite(2.0)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(thm1_lower_bound(0, MiEstimate::Finite(2.0)).is_err());
        assert!(thm1_lower_bound(2, MiEstimate::Finite(0.5)).is_err());
    }

    #[test]
    fn thm1_monotone_in_information() {
        let mut prev = -1.0;
        for i in [1.0, 1.5, 2.0, 10.0, 1e6] {
            let v = thm1_lower_bound(7, MiEstimate::Finite(i)).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev < 1.0);
    }

    #[test]
    fn cor_rates_example_and_inversion() {
        let cap = cor_rates_mi_cap((-1.0f64).exp(), 1).unwrap();
        assert!((cap - 1.0 / (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((cap - 1.5819767068693265).abs() < 1e-10);
        for (eps, n) in [(0.1, 3u64), (0.5, 10), (0.9, 100), (1e-3, 7)] {
            let cap = cor_rates_mi_cap(eps, n).unwrap();
            let back = thm1_lower_bound(n, MiEstimate::Finite(cap)).unwrap();
            assert!((back - eps).abs() < 1e-10, "eps {eps} n {n}: {back}");
        }
    }

    #[test]
    fn cor_rates_blows_up_near_one() {
        let a = cor_rates_mi_cap(0.9, 5).unwrap();
        let b = cor_rates_mi_cap(0.99, 5).unwrap();
        let c = cor_rates_mi_cap(0.999999, 5).unwrap();
        assert!(a < b && b < c);
        assert!(cor_rates_mi_cap(1.0, 5).is_err());
        assert!(cor_rates_mi_cap(0.0, 5).is_err());
    }

    #[test]
    fn thm2_examples() {
        assert_eq!(thm2_rate_bound(10, 10, 0.0, 0.0).unwrap(), 0.0);
        let v = thm2_rate_bound(100, 100, 1.0, 1.0).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
        // quadrupling both sample sizes halves the bound
        let half = thm2_rate_bound(400, 400, 1.0, 1.0).unwrap();
        assert!((half - 0.2).abs() < 1e-15);
        assert!(thm2_rate_bound(0, 1, 1.0, 1.0).is_err());
        assert!(thm2_rate_bound(1, 1, -1.0, 1.0).is_err());
    }

    #[test]
    fn thm3_examples() {
        assert_eq!(thm3_mi_cap(0.0, 1.0).unwrap(), 1.0);
        let e = thm3_mi_cap(1.0, 1.0).unwrap();
        assert!((e - std::f64::consts::E).abs() < 1e-12);
        // doubling sigma decreases the cap
        assert!(thm3_mi_cap(1.0, 2.0).unwrap() < e);
        assert!(thm3_mi_cap(-1.0, 1.0).is_err());
        assert!(thm3_mi_cap(1.0, 0.0).is_err());
    }

    #[test]
    fn thm3_rate_consistent_with_thm2_under_cap() {
        let (t, s, n0, n1) = (0.8, 0.5, 50u64, 80u64);
        let cap = thm3_mi_cap(t, s).unwrap();
        let via_thm2 = thm2_rate_bound(n0, n1, cap, cap).unwrap();
        let direct = thm3_rate_bound(t, s, n0, n1).unwrap();
        assert!((via_thm2 - direct).abs() < 1e-10);
    }

    #[test]
    fn mc_mse_examples() {
        assert!((mc_mse_bound(0.0, 1.0, 1, 1).unwrap() - 4.0).abs() < 1e-15);
        assert!((mc_mse_bound(1.0, 1.0, 100, 1).unwrap() - 0.12).abs() < 1e-15);
        // doubling m halves the bound
        let a = mc_mse_bound(1.0, 0.5, 10, 1).unwrap();
        let b = mc_mse_bound(1.0, 0.5, 10, 2).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(mc_mse_bound(1.0, 1.0, 0, 1).is_err());
    }
}
