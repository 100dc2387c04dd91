//! One-sample Kolmogorov-Smirnov check against a normal with the sample's own
//! mean and standard deviation. The p-value uses the asymptotic Kolmogorov
//! distribution, so it is only approximate when the parameters are estimated.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda
            * (y + y.powi(9) + y.powi(25) + y.powi(49));
        1.0 - cdf
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        2.0 * (x - x.powi(4) + x.powi(9) - x.powi(16))
    };
    p.clamp(0.0, 1.0)
}

pub fn ks_normal(values: &[f64]) -> KsResult {
    let n = values.len();
    if n < 2 {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    if !sd.is_finite() || sd <= 1e-12 * mean.abs().max(1.0) {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf((x - mean) / sd);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sq = nf.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_reference_points() {
        // classical critical values of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.628) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_survival(0.5) - 0.9639).abs() < 1e-3);
        // both branches agree where they meet
        assert!((kolmogorov_survival(1.1799) - kolmogorov_survival(1.1801)).abs() < 1e-3);
    }

    #[test]
    fn constant_sample() {
        let r = ks_normal(&[0.4; 50]);
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn normal_quantiles_fit_and_bimodal_does_not() {
        // evenly spaced normal quantiles via bisection on the cdf
        let n = 400;
        let q: Vec<f64> = (0..n)
            .map(|i| {
                let target = (i as f64 + 0.5) / n as f64;
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect();
        assert!(ks_normal(&q).p_value > 0.5);
        let bimodal: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect();
        let r = ks_normal(&bimodal);
        assert!(r.statistic > 0.3 && r.p_value < 1e-6);
    }
}
