//! χ noise model of inlier residuals and the model quality functions:
//! RANSAC and MSAC with a fixed σ, and three σ-marginalized qualities
//! (inlier counting, uniform log-likelihood, and the MAGSAC χ log-likelihood).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::{Model, ProblemDef, ProblemKind};
use crate::points::PointSet;

/// Residuals below this are clamped before taking logarithms.
pub const RESIDUAL_LOG_FLOOR: f64 = 1e-9;

/// User-facing noise settings. The residual dimension comes from the
/// [`ProblemDef`], and the outlier bound defaults to an image diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Upper end of the marginalized noise range, pixels.
    pub sigma_max: f64,
    /// Number of uniform σ partitions used by σ-consensus.
    pub partitions: usize,
    /// Quantile of the χ residual distribution defining `τ(σ)`.
    pub quantile: f64,
    /// Support `l` of the uniform outlier residual distribution, pixels.
    pub outlier_bound: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_max: 10.0,
            partitions: 10,
            quantile: 0.99,
            outlier_bound: None,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_max > 0.0) || !self.sigma_max.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma_max must be positive, got {}", self.sigma_max)));
        }
        if self.partitions < 2 {
            return Err(Error::InvalidConfig(format!("partitions must be >= 2, got {}", self.partitions)));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::InvalidConfig(format!("quantile must lie in (0, 1), got {}", self.quantile)));
        }
        if let Some(l) = self.outlier_bound {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidConfig(format!("outlier bound must be positive, got {l}")));
            }
        }
        Ok(())
    }
}

/// `C(ρ) = 1 / (2^{ρ/2} Γ(ρ/2))`.
pub fn chi_norm_constant(rho: u32) -> f64 {
    let half = rho as f64 / 2.0;
    1.0 / (2f64.powf(half) * gamma(half))
}

/// Inverse CDF of the χ² distribution with `rho` degrees of freedom.
pub fn chi2_quantile(quantile: f64, rho: u32) -> f64 {
    ChiSquared::new(rho as f64)
        .expect("rho >= 1")
        .inverse_cdf(quantile)
}

/// Inlier-outlier threshold `τ(σ)`: the `quantile` of the χ residual
/// distribution with scale `sigma`.
pub fn tau(sigma: f64, rho: u32, quantile: f64) -> f64 {
    sigma * chi2_quantile(quantile, rho).sqrt()
}

/// Density `g(r | σ)` of inlier residuals.
pub fn inlier_density(r: f64, sigma: f64, rho: u32) -> f64 {
    let rho_f = rho as f64;
    2.0 * chi_norm_constant(rho) * sigma.powf(-rho_f) * (-r * r / (2.0 * sigma * sigma)).exp() * r.powf(rho_f - 1.0)
}

/// Noise settings resolved against a problem and a dataset, with the
/// derived constants cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_max: f64,
    pub partitions: usize,
    pub quantile: f64,
    pub rho: u32,
    pub outlier_bound: f64,
    tau_slope: f64,
    chi_c: f64,
}

impl NoiseModel {
    pub fn new(cfg: &NoiseConfig, rho: u32, outlier_bound: f64) -> Result<Self> {
        cfg.validate()?;
        if rho == 0 {
            return Err(Error::InvalidConfig("rho must be >= 1".into()));
        }
        let tau_slope = chi2_quantile(cfg.quantile, rho).sqrt();
        let tau_max = tau_slope * cfg.sigma_max;
        if !(outlier_bound >= tau_max) {
            return Err(Error::InvalidConfig(format!(
                "outlier bound {outlier_bound} is below tau(sigma_max) = {tau_max}"
            )));
        }
        Ok(Self {
            sigma_max: cfg.sigma_max,
            partitions: cfg.partitions,
            quantile: cfg.quantile,
            rho,
            outlier_bound,
            tau_slope,
            chi_c: chi_norm_constant(rho),
        })
    }

    /// Resolves the outlier bound from the config, else from image
    /// diagonals, else from the bounding box of the residual-bearing image.
    /// A derived bound is raised to `τ(σ_max)` if it falls below it.
    pub fn for_points(cfg: &NoiseConfig, problem: &ProblemDef, points: &PointSet) -> Result<Self> {
        if let Some(l) = cfg.outlier_bound {
            return Self::new(cfg, problem.rho, l);
        }
        let derived = match problem.kind {
            ProblemKind::Line2D => points.image1_diag.unwrap_or_else(|| points.bbox_diagonal(0)),
            ProblemKind::Homography => points.image2_diag.unwrap_or_else(|| points.bbox_diagonal(2)),
            ProblemKind::Fundamental => match (points.image1_diag, points.image2_diag) {
                (Some(a), Some(b)) => a.max(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => points.bbox_diagonal(0).max(points.bbox_diagonal(2)),
            },
        };
        cfg.validate()?;
        let tau_max = tau(cfg.sigma_max, problem.rho, cfg.quantile);
        Self::new(cfg, problem.rho, derived.max(tau_max))
    }

    /// `τ(σ) = slope · σ`.
    #[inline]
    pub fn tau(&self, sigma: f64) -> f64 {
        self.tau_slope * sigma
    }

    #[inline]
    pub fn tau_slope(&self) -> f64 {
        self.tau_slope
    }

    #[inline]
    pub fn tau_max(&self) -> f64 {
        self.tau_slope * self.sigma_max
    }

    /// The σ at which residual `d` sits exactly on the threshold.
    #[inline]
    pub fn sigma_of_residual(&self, d: f64) -> f64 {
        d / self.tau_slope
    }

    #[inline]
    pub fn chi_c(&self) -> f64 {
        self.chi_c
    }

    pub fn with_sigma_max(mut self, sigma_max: f64) -> Self {
        self.sigma_max = sigma_max;
        self
    }
}

/// `Q_RANSAC`: number of points with residual below `sigma`.
pub fn ransac_quality(model: &Model, sigma: f64, points: &PointSet, problem: &ProblemDef) -> f64 {
    points.iter().filter(|p| problem.residual(model, p) < sigma).count() as f64
}

/// `Q_MSAC`: truncated quadratic score over points with `D² < (9/4)σ²`.
pub fn msac_quality(model: &Model, sigma: f64, points: &PointSet, problem: &ProblemDef) -> f64 {
    let gate = 2.25 * sigma * sigma;
    points
        .iter()
        .map(|p| {
            let d = problem.residual(model, p);
            let d2 = d * d;
            if d2 < gate {
                1.0 - d2 / gate
            } else {
                0.0
            }
        })
        .sum()
}

/// Inlier count marginalized over `σ ~ U(0, σ_max)`: `Σ_{D_k < σ_max} (1 − D_k/σ_max)`.
pub fn marginal_ransac_quality(model: &Model, points: &PointSet, problem: &ProblemDef, noise: &NoiseModel) -> f64 {
    let smax = noise.sigma_max;
    points
        .iter()
        .map(|p| problem.residual(model, p))
        .filter(|&d| d < smax)
        .map(|d| 1.0 - d / smax)
        .sum()
}

/// Log-likelihood under uniform inlier `U(0, σ)` and outlier `U(0, l)`
/// residuals, marginalized over `σ ~ U(0, σ_max)`. Requires `l ≥ σ_max`.
pub fn uniform_loglik_quality(model: &Model, points: &PointSet, problem: &ProblemDef, noise: &NoiseModel) -> f64 {
    let (smax, l) = (noise.sigma_max, noise.outlier_bound);
    let mut k = 0usize;
    let mut sum = 0.0;
    for p in points.iter() {
        let d = problem.residual(model, p);
        if d < smax {
            k += 1;
            let d = d.max(RESIDUAL_LOG_FLOOR);
            sum += d * (1.0 + (l / d).ln());
        }
    }
    k as f64 * ((l / smax).ln() + 1.0) - sum / smax - points.len() as f64 * l.ln()
}

/// Sorted residuals of one model together with the prefix sums of the
/// marginalized χ quality.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfile {
    /// `(residual, point index)` ascending by residual.
    pub sorted: Vec<(f64, usize)>,
    /// Number of residuals strictly below `τ(σ_max)`.
    pub k: usize,
    /// `R_i = ½ Σ_{j ≤ i} D_j²` for `i = 1..=K`.
    pub half_sq_prefix: Vec<f64>,
    /// `Lr_i = Σ_{j ≤ i} ln max(D_j, floor)` for `i = 1..=K`.
    pub log_prefix: Vec<f64>,
    /// Total number of points `|P|`.
    pub n_points: usize,
}

impl ResidualProfile {
    /// Builds a profile from per-point residuals (index = position).
    pub fn from_residuals(residuals: &[f64], noise: &NoiseModel) -> Self {
        let mut sorted: Vec<(f64, usize)> = residuals.iter().copied().zip(0..).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let tau_max = noise.tau_max();
        let k = sorted.partition_point(|&(d, _)| d < tau_max);
        let mut half_sq_prefix = Vec::with_capacity(k);
        let mut log_prefix = Vec::with_capacity(k);
        let (mut r, mut lr) = (0.0, 0.0);
        for &(d, _) in &sorted[..k] {
            r += 0.5 * d * d;
            lr += d.max(RESIDUAL_LOG_FLOOR).ln();
            half_sq_prefix.push(r);
            log_prefix.push(lr);
        }
        Self {
            sorted,
            k,
            half_sq_prefix,
            log_prefix,
            n_points: residuals.len(),
        }
    }

    /// `σ_i` induced by the `i`-th sorted residual (1-based), `σ_0 = 0`.
    #[inline]
    pub fn sigma(&self, i: usize, noise: &NoiseModel) -> f64 {
        if i == 0 {
            0.0
        } else {
            noise.sigma_of_residual(self.sorted[i - 1].0)
        }
    }

    /// Point indices with residual below `τ(σ_max)`, ascending by residual.
    pub fn gated_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.sorted[..self.k].iter().map(|&(_, i)| i)
    }

    /// Number of residuals `≤ threshold`.
    pub fn count_within(&self, threshold: f64) -> usize {
        self.sorted.partition_point(|&(d, _)| d <= threshold)
    }
}

pub fn build_residual_profile(model: &Model, points: &PointSet, problem: &ProblemDef, noise: &NoiseModel) -> ResidualProfile {
    ResidualProfile::from_residuals(&problem.residuals(model, points), noise)
}

/// Marginalized χ log-likelihood of a model; higher is better.
///
/// `(1/σ_max) ∫₀^{σ_max} ln L(θ, P | σ) dσ`, evaluated in closed form. With
/// `σ_i = D_i / τ(1)` the inlier set is constant on each `(σ_i, σ_{i+1})`
/// (and on the tail `(σ_K, σ_max)`), where the integrand is
/// `i(ln(2C(ρ)l) − ρ ln σ) − R_i/σ² + (ρ−1)Lr_i`.
pub fn magsac_quality(profile: &ResidualProfile, noise: &NoiseModel) -> f64 {
    let rho = noise.rho as f64;
    let l = noise.outlier_bound;
    let log_2cl = (2.0 * noise.chi_c() * l).ln();
    let x_log_x = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    let mut sum = 0.0;
    for i in 1..=profile.k {
        let a = profile.sigma(i, noise).min(noise.sigma_max);
        let b = if i < profile.k {
            profile.sigma(i + 1, noise).min(noise.sigma_max)
        } else {
            noise.sigma_max
        };
        if b <= a {
            continue;
        }
        let fi = i as f64;
        let r = profile.half_sq_prefix[i - 1];
        let inv_diff = if r > 0.0 { r * (1.0 / b - 1.0 / a) } else { 0.0 };
        sum += fi * log_2cl * (b - a) - fi * rho * (x_log_x(b) - b - x_log_x(a) + a)
            + inv_diff
            + (rho - 1.0) * profile.log_prefix[i - 1] * (b - a);
    }
    -(profile.n_points as f64) * l.ln() + sum / noise.sigma_max
}

/// The right-endpoint sum over the residual-induced σ grid,
///
/// `−|P| ln l + (1/σ_max) Σ_{i≤K} [i(ln(2C(ρ)l) − ρ ln σ_i) − R_i/σ_i² + (ρ−1)Lr_i](σ_i − σ_{i−1})`,
///
/// which leaves out the interval `(σ_K, σ_max]`. Kept for comparison with
/// [`magsac_quality`].
pub fn magsac_quality_grid_sum(profile: &ResidualProfile, noise: &NoiseModel) -> f64 {
    let rho = noise.rho as f64;
    let l = noise.outlier_bound;
    let log_2cl = (2.0 * noise.chi_c() * l).ln();
    let mut sum = 0.0;
    let mut prev_sigma = 0.0;
    for i in 1..=profile.k {
        let sigma = profile.sigma(i, noise);
        let width = sigma - prev_sigma;
        prev_sigma = sigma;
        if width <= 0.0 {
            continue;
        }
        let fi = i as f64;
        let term = fi * (log_2cl - rho * sigma.ln()) - profile.half_sq_prefix[i - 1] / (sigma * sigma)
            + (rho - 1.0) * profile.log_prefix[i - 1];
        sum += term * width;
    }
    -(profile.n_points as f64) * l.ln() + sum / noise.sigma_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Line2D;

    fn noise(rho: u32, l: f64) -> NoiseModel {
        NoiseModel::new(&NoiseConfig::default(), rho, l).unwrap()
    }

    #[test]
    fn chi_constant_values() {
        assert!((chi_norm_constant(2) - 0.5).abs() < 1e-15);
        assert!((chi_norm_constant(4) - 0.25).abs() < 1e-15);
        assert!((chi_norm_constant(1) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tau_examples() {
        assert!((tau(1.0, 4, 0.99) - 3.644).abs() < 0.005);
        assert!((tau(2.0, 4, 0.99) - 7.287).abs() < 0.01);
        assert!((tau(1.0, 2, 0.99) - 3.035).abs() < 0.005);
    }

    #[test]
    fn density_examples() {
        assert_eq!(inlier_density(0.0, 1.0, 2), 0.0);
        assert!((inlier_density(1.0, 1.0, 2) - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = NoiseConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.partitions = 1;
        assert!(cfg.validate().is_err());
        cfg = NoiseConfig { quantile: 1.0, ..NoiseConfig::default() };
        assert!(cfg.validate().is_err());
        // l must cover tau(sigma_max)
        assert!(NoiseModel::new(&NoiseConfig::default(), 2, 10.0).is_err());
    }

    fn horizontal_line() -> Model {
        Model::from(Line2D::new(0.0, 1.0, 0.0).unwrap())
    }

    fn points_at(distances: &[f64]) -> PointSet {
        let pts: Vec<[f64; 2]> = distances.iter().enumerate().map(|(i, &d)| [i as f64, d]).collect();
        PointSet::from_points(&pts).unwrap()
    }

    #[test]
    fn fixed_sigma_qualities() {
        let pl = ProblemDef::line2d();
        let m = horizontal_line();
        let on = points_at(&[0.0; 5]);
        assert_eq!(ransac_quality(&m, 0.3, &on, &pl), 5.0);
        assert_eq!(msac_quality(&m, 0.3, &on, &pl), 5.0);
        let far = points_at(&[1.0, 2.0, 3.0]);
        assert_eq!(ransac_quality(&m, 0.3, &far, &pl), 0.0);
        let mixed = points_at(&[0.1, 0.29, 0.3, 0.31, 5.0, -0.2]);
        assert_eq!(ransac_quality(&m, 0.3, &mixed, &pl), 3.0);
        // D = 1.5 σ sits on the open gate boundary.
        let boundary = points_at(&[3.0]);
        assert_eq!(msac_quality(&m, 2.0, &boundary, &pl), 0.0);
    }

    #[test]
    fn marginal_qualities_closed_forms() {
        let pl = ProblemDef::line2d();
        let m = horizontal_line();
        let nm = noise(1, 100.0);
        let far = points_at(&[20.0, 30.0]);
        assert_eq!(marginal_ransac_quality(&m, &far, &pl, &nm), 0.0);
        assert!((uniform_loglik_quality(&m, &far, &pl, &nm) + 2.0 * 100f64.ln()).abs() < 1e-12);
        let on = points_at(&[0.0; 4]);
        assert_eq!(marginal_ransac_quality(&m, &on, &pl, &nm), 4.0);

        // Single inlier at D = σ_max with l = σ_max: everything but −|P| ln l cancels.
        let cfg = NoiseConfig { sigma_max: 1.0, ..NoiseConfig::default() };
        let tight = NoiseModel { outlier_bound: 1.0, ..NoiseModel::new(&cfg, 1, 3.0).unwrap() };
        let one = points_at(&[1.0 - 1e-15]);
        let q = uniform_loglik_quality(&m, &one, &pl, &tight);
        assert!(q.abs() < 1e-12, "{q}");
    }

    #[test]
    fn profile_prefix_sums_and_clamping() {
        let nm = noise(2, 1000.0);
        let p = ResidualProfile::from_residuals(&[0.0, 0.0, 0.0], &nm);
        assert_eq!(p.k, 3);
        assert!(p.half_sq_prefix.iter().all(|&r| r == 0.0));
        for (i, lr) in p.log_prefix.iter().enumerate() {
            assert!((lr - (i + 1) as f64 * RESIDUAL_LOG_FLOOR.ln()).abs() < 1e-9);
        }
        let empty = ResidualProfile::from_residuals(&[500.0, 900.0], &nm);
        assert_eq!(empty.k, 0);
        assert_eq!(magsac_quality(&empty, &nm), -2.0 * 1000f64.ln());

        let res = [3.0, 0.5, 40.0, 1.5, 2.0];
        let p = ResidualProfile::from_residuals(&res, &nm);
        assert_eq!(p.k, 4);
        assert_eq!(p.sorted.iter().map(|s| s.1).collect::<Vec<_>>(), vec![1, 3, 4, 0, 2]);
        let direct: f64 = [0.5f64, 1.5, 2.0, 3.0].iter().map(|d| 0.5 * d * d).sum();
        assert!((p.half_sq_prefix[3] - direct).abs() < 1e-12);
        let direct: f64 = [0.5f64, 1.5, 2.0, 3.0].iter().map(|d| d.ln()).sum();
        assert!((p.log_prefix[3] - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_residuals_keep_quality_finite() {
        let nm = noise(2, 1000.0);
        let p = ResidualProfile::from_residuals(&[0.0, 0.0, 0.0, 1.0, 2.0], &nm);
        assert!(magsac_quality(&p, &nm).is_finite());
        assert!(magsac_quality_grid_sum(&p, &nm).is_finite());
    }
}
