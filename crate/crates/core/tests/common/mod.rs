//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the scoring code under test.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Γ(a) for a positive integer or half-integer `a`.
pub fn gamma_half_integer(a: f64) -> f64 {
    let twice = (2.0 * a).round();
    assert!((twice - 2.0 * a).abs() < 1e-12 && twice >= 1.0, "unsupported argument {a}");
    let (mut x, mut g) = if twice as i64 % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < a - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Regularized lower incomplete gamma P(a, x) by its power series.
pub fn lower_gamma_regularized(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..2000 {
        term *= x / (a + n as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (sum * (-x + a * x.ln()).exp() / gamma_half_integer(a)).min(1.0)
}

/// χ²(ρ) quantile by bisection on the CDF.
pub fn chi2_quantile_oracle(q: f64, rho: u32) -> f64 {
    let a = rho as f64 / 2.0;
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lower_gamma_regularized(a, mid / 2.0) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn tau_oracle(sigma: f64, rho: u32, q: f64) -> f64 {
    sigma * chi2_quantile_oracle(q, rho).sqrt()
}

/// Normalizing constant of the χ density with ρ degrees of freedom.
pub fn chi_constant_oracle(rho: u32) -> f64 {
    let a = rho as f64 / 2.0;
    1.0 / (2f64.powf(a) * gamma_half_integer(a))
}

/// Parameters shared by the marginalized quality oracles.
#[derive(Debug, Clone, Copy)]
pub struct Marginal {
    pub sigma_max: f64,
    pub outlier_bound: f64,
    pub rho: u32,
    pub quantile: f64,
    pub steps: usize,
}

impl Marginal {
    /// `(1/σ_max) ∫_0^σ_max f(σ) dσ` by the midpoint rule.
    fn average(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.sigma_max / self.steps as f64;
        let total: f64 = (0..self.steps).map(|s| f((s as f64 + 0.5) * h) * h).sum();
        total / self.sigma_max
    }

    /// Marginalized log-likelihood with χ inliers inside τ(σ) and uniform outliers.
    pub fn chi_loglik(&self, residuals: &[f64]) -> f64 {
        let c = chi_constant_oracle(self.rho);
        let slope = chi2_quantile_oracle(self.quantile, self.rho).sqrt();
        let rho = self.rho as f64;
        let l = self.outlier_bound;
        self.average(|sigma| {
            residuals
                .iter()
                .map(|&d| {
                    if d < slope * sigma {
                        let density = 2.0 * c * sigma.powf(-rho) * d.max(1e-9).powf(rho - 1.0)
                            * (-d * d / (2.0 * sigma * sigma)).exp();
                        density.ln()
                    } else {
                        -l.ln()
                    }
                })
                .sum()
        })
    }

    /// Inlier count at threshold σ, averaged over σ.
    pub fn ransac_count(&self, residuals: &[f64]) -> f64 {
        self.average(|sigma| residuals.iter().filter(|&&d| d < sigma).count() as f64)
    }

    /// Log-likelihood with uniform inliers on (0, σ) and uniform outliers on (0, l).
    pub fn uniform_loglik(&self, residuals: &[f64]) -> f64 {
        let l = self.outlier_bound;
        self.average(|sigma| {
            residuals
                .iter()
                .map(|&d| if d < sigma { -sigma.ln() } else { -l.ln() })
                .sum()
        })
    }
}

/// Relative difference guarded against a zero reference.
pub fn rel_diff(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1e-300)
}
