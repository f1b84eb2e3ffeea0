//! σ-consensus: polishes a model by weighted least squares, with per-point
//! weights given by the inlier likelihood marginalized over the noise scale.
//!
//! The σ range `(0, σ_max']` (with `σ_max'` shrunk to the largest gated
//! residual) is split into `d` uniform partitions. At each partition upper
//! bound `σ_k` a model `θ_k` is fitted to every gated point with residual
//! `≤ τ(σ_k)` under the input model, and each gated point accumulates
//! `2C(ρ)·δ·σ_k^{−ρ}·D^{ρ−1}·exp(−D²/2σ_k²) / σ_max'` with `D` its residual
//! under `θ_k`. The polished model is the weighted fit over the gated set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Model, ProblemDef};
use crate::points::PointSet;
use crate::scoring::NoiseModel;

/// Largest gated σ below which all residuals are treated as exactly zero.
const ZERO_SIGMA_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    #[default]
    Sequential,
    /// Partition fits and weight contributions are computed on the rayon
    /// pool; contributions are summed in partition order, so results match
    /// the sequential path bit for bit.
    Parallel,
}

/// Uniform split of `(0, σ_max]` into `d` partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSchedule {
    pub delta_sigma: f64,
    pub bin_uppers: Vec<f64>,
}

impl PartitionSchedule {
    pub fn new(sigma_max: f64, partitions: usize) -> Self {
        let delta_sigma = sigma_max / partitions as f64;
        let mut bin_uppers: Vec<f64> = (1..partitions).map(|k| k as f64 * delta_sigma).collect();
        bin_uppers.push(sigma_max);
        Self {
            delta_sigma,
            bin_uppers,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaConsensusResult {
    pub refined_model: Model,
    /// One weight per input point; zero outside the gated set.
    pub weights: Vec<f64>,
    /// Number of partition fits actually performed.
    pub bins_used: usize,
    /// Points with residual below `τ(σ_max)` under the input model, ascending by residual.
    pub gated_inlier_indices: Vec<usize>,
    /// Set when the input model is returned unchanged.
    pub refinement_skipped: bool,
}

/// One summand of the marginalized point likelihood for residual `d` at
/// scale `sigma` over a partition of width `delta`, without the global
/// `1/σ_max` factor.
#[inline]
pub fn weight_term(d: f64, sigma: f64, delta: f64, noise: &NoiseModel) -> f64 {
    if !d.is_finite() || !(sigma > 0.0) {
        return 0.0;
    }
    let rho = noise.rho as f64;
    let density = sigma.powf(-rho) * (-d * d / (2.0 * sigma * sigma)).exp();
    let radial = if noise.rho == 1 { 1.0 } else { d.powf(rho - 1.0) };
    2.0 * noise.chi_c() * delta * density * radial
}

/// [`weight_term`] for a point under the partition model `theta_sigma`.
pub fn point_weight_contribution(
    theta_sigma: &Model,
    p: &[f64],
    problem: &ProblemDef,
    sigma: f64,
    delta: f64,
    noise: &NoiseModel,
) -> f64 {
    weight_term(problem.residual(theta_sigma, p), sigma, delta, noise)
}

fn skipped(theta: &Model, n: usize, gated: Vec<usize>, weights: Option<Vec<f64>>, bins_used: usize) -> SigmaConsensusResult {
    SigmaConsensusResult {
        refined_model: *theta,
        weights: weights.unwrap_or_else(|| vec![0.0; n]),
        bins_used,
        gated_inlier_indices: gated,
        refinement_skipped: true,
    }
}

pub fn sigma_consensus(
    points: &PointSet,
    theta: &Model,
    problem: &ProblemDef,
    noise: &NoiseModel,
    parallelism: Parallelism,
) -> SigmaConsensusResult {
    let residuals = problem.residuals(theta, points);
    sigma_consensus_with_residuals(points, theta, &residuals, problem, noise, parallelism)
}

/// As [`sigma_consensus`], reusing residuals of `theta` already computed by the caller.
pub fn sigma_consensus_with_residuals(
    points: &PointSet,
    theta: &Model,
    residuals: &[f64],
    problem: &ProblemDef,
    noise: &NoiseModel,
    parallelism: Parallelism,
) -> SigmaConsensusResult {
    let n = points.len();
    let tau_max = noise.tau_max();
    let mut gated: Vec<(f64, usize)> = residuals
        .iter()
        .copied()
        .zip(0..)
        .filter(|&(d, _)| d < tau_max)
        .collect();
    gated.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let gated_idx: Vec<usize> = gated.iter().map(|g| g.1).collect();

    if gated.len() < problem.sample_size() {
        return skipped(theta, n, gated_idx, None, 0);
    }

    let sigma_top = noise.sigma_of_residual(gated.last().map_or(0.0, |g| g.0));
    if sigma_top <= ZERO_SIGMA_EPS {
        // Every gated residual is zero: all partition models coincide and
        // the marginalized weights are uniform.
        let mut weights = vec![0.0; n];
        for &i in &gated_idx {
            weights[i] = 1.0;
        }
        return match problem.fit_weighted(points, &gated_idx, None) {
            Ok(m) => SigmaConsensusResult {
                refined_model: m,
                weights,
                bins_used: 1,
                gated_inlier_indices: gated_idx,
                refinement_skipped: false,
            },
            Err(_) => skipped(theta, n, gated_idx, Some(weights), 1),
        };
    }

    let schedule = PartitionSchedule::new(sigma_top, noise.partitions);
    let delta = schedule.delta_sigma;
    let slope = noise.tau_slope();
    let floor = problem.nonminimal_floor();

    // Cumulative gated prefix admitted at each partition bound.
    let prefix: Vec<usize> = schedule
        .bin_uppers
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            if k + 1 == schedule.bin_uppers.len() {
                gated.len()
            } else {
                gated.partition_point(|g| g.0 <= slope * s)
            }
        })
        .collect();

    // Distinct prefixes are fitted once; partitions without new points reuse the fit.
    let mut distinct: Vec<usize> = prefix.iter().copied().filter(|&c| c >= floor).collect();
    distinct.dedup();
    let fit = |&c: &usize| (c, problem.fit_weighted(points, &gated_idx[..c], None).ok());
    let fits: Vec<(usize, Option<Model>)> = match parallelism {
        Parallelism::Sequential => distinct.iter().map(fit).collect(),
        Parallelism::Parallel => distinct.par_iter().map(fit).collect(),
    };
    let model_for = |c: usize| fits.iter().find(|f| f.0 == c).and_then(|f| f.1.as_ref());

    let bins: Vec<(f64, &Model)> = schedule
        .bin_uppers
        .iter()
        .zip(&prefix)
        .filter_map(|(&s, &c)| model_for(c).map(|m| (s, m)))
        .collect();
    let bins_used = fits.iter().filter(|f| f.1.is_some()).count();

    let contribution = |&(sigma, model): &(f64, &Model)| -> Vec<f64> {
        gated_idx
            .iter()
            .map(|&i| point_weight_contribution(model, points.point(i), problem, sigma, delta, noise) / sigma_top)
            .collect()
    };
    let per_bin: Vec<Vec<f64>> = match parallelism {
        Parallelism::Sequential => bins.iter().map(contribution).collect(),
        Parallelism::Parallel => bins.par_iter().map(contribution).collect(),
    };
    let mut gated_weights = vec![0.0; gated_idx.len()];
    for contrib in &per_bin {
        for (w, c) in gated_weights.iter_mut().zip(contrib) {
            *w += c;
        }
    }

    let mut weights = vec![0.0; n];
    for (&i, &w) in gated_idx.iter().zip(&gated_weights) {
        weights[i] = w;
    }
    let positive = gated_weights.iter().filter(|&&w| w > 0.0).count();
    if positive < floor {
        return skipped(theta, n, gated_idx, Some(weights), bins_used);
    }
    match problem.fit_weighted(points, &gated_idx, Some(&gated_weights)) {
        Ok(m) if m.satisfies_invariants() => SigmaConsensusResult {
            refined_model: m,
            weights,
            bins_used,
            gated_inlier_indices: gated_idx,
            refinement_skipped: false,
        },
        _ => skipped(theta, n, gated_idx, Some(weights), bins_used),
    }
}

/// σ-consensus applied once to the output of another estimator.
pub fn post_process(points: &PointSet, theta: &Model, problem: &ProblemDef, noise: &NoiseModel) -> Model {
    sigma_consensus(points, theta, problem, noise, Parallelism::Sequential).refined_model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Line2D;
    use crate::scoring::{chi_norm_constant, NoiseConfig};

    fn noise(rho: u32) -> NoiseModel {
        NoiseModel::new(&NoiseConfig::default(), rho, 1000.0).unwrap()
    }

    #[test]
    fn schedule_is_uniform() {
        let s = PartitionSchedule::new(10.0, 10);
        assert_eq!(s.bin_uppers.len(), 10);
        assert_eq!(s.delta_sigma, 1.0);
        assert_eq!(*s.bin_uppers.last().unwrap(), 10.0);
        for w in s.bin_uppers.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_term_limits() {
        let nm = noise(2);
        assert_eq!(weight_term(0.0, 1.0, 0.1, &nm), 0.0);
        assert_eq!(weight_term(1e6, 1.0, 0.1, &nm), 0.0);
        assert_eq!(weight_term(f64::INFINITY, 1.0, 0.1, &nm), 0.0);
        let nm1 = noise(1);
        assert!(weight_term(0.0, 1.0, 0.1, &nm1) > 0.0);
    }

    #[test]
    fn weight_term_matches_formula() {
        for rho in 1..=4u32 {
            let nm = noise(rho);
            for &(d, s, delta) in &[(0.3f64, 0.7f64, 0.05f64), (2.0, 1.5, 0.2), (5.0, 9.0, 1.0)] {
                let expected = 2.0 * chi_norm_constant(rho) * delta * s.powi(-(rho as i32))
                    * d.powi(rho as i32 - 1)
                    * (-(d * d) / (2.0 * s * s)).exp();
                let got = weight_term(d, s, delta, &nm);
                assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1e-300), "rho {rho}");
            }
        }
    }

    #[test]
    fn too_few_gated_points_returns_input() {
        let pts = PointSet::from_points(&[[0.0, 0.0], [1.0, 500.0], [2.0, 900.0]]).unwrap();
        let theta = Model::from(Line2D::new(0.0, 1.0, 0.0).unwrap());
        let r = sigma_consensus(&pts, &theta, &ProblemDef::line2d(), &noise(1), Parallelism::Sequential);
        assert!(r.refinement_skipped);
        assert_eq!(r.refined_model, theta);
        assert_eq!(r.gated_inlier_indices, vec![0]);
        assert!(r.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn zero_residuals_reproduce_the_model() {
        let pts: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64 + 1.0]).collect();
        let pts = PointSet::from_points(&pts).unwrap();
        let theta = Model::from(Line2D::new(2.0, -1.0, 1.0).unwrap());
        for d in [2, 7, 50] {
            let mut nm = noise(1);
            nm.partitions = d;
            let r = sigma_consensus(&pts, &theta, &ProblemDef::line2d(), &nm, Parallelism::Sequential);
            assert!(!r.refinement_skipped);
            assert!(r.refined_model.distance_to(&theta) < 1e-8);
        }
    }
}
