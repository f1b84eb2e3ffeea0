//! Robust estimators: MAGSAC with the marginalized termination criterion,
//! and the RANSAC / MSAC / LO-RANSAC / LO-MSAC baselines with the standard one.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orientation_consistent, Model, ProblemDef};
use crate::points::PointSet;
use crate::scoring::{magsac_quality, NoiseConfig, NoiseModel, ResidualProfile};
use crate::sigma_consensus::{sigma_consensus_with_residuals, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Required confidence `η` of having drawn an all-inlier sample.
    pub confidence: f64,
    pub max_iterations: usize,
    pub min_iterations: usize,
    /// Fixed inlier threshold of the baselines, pixels.
    pub loop_sigma: f64,
    /// Inner RANSAC iterations `r` of local optimization.
    pub inner_iterations: usize,
    /// Scale whose `τ` defines the early-bail inlier count, pixels.
    pub reference_sigma: f64,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub enable_lo: bool,
    pub enable_post_sigma: bool,
    pub parallelism: Parallelism,
    /// Record `(iteration, best quality, bound)` after every iteration.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            confidence: 0.95,
            max_iterations: 100_000,
            min_iterations: 20,
            loop_sigma: 0.3,
            inner_iterations: 20,
            reference_sigma: 1.0,
            seed: 0,
            noise: NoiseConfig::default(),
            enable_lo: false,
            enable_post_sigma: false,
            parallelism: Parallelism::Sequential,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        if self.min_iterations < 1 || self.max_iterations < self.min_iterations {
            return Err(Error::InvalidConfig(format!(
                "need max_iterations >= min_iterations >= 1, got {} and {}",
                self.max_iterations, self.min_iterations
            )));
        }
        if !(self.loop_sigma > 0.0) || !self.loop_sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("loop_sigma must be positive, got {}", self.loop_sigma)));
        }
        if !(self.reference_sigma > 0.0) || !self.reference_sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "reference_sigma must be positive, got {}",
                self.reference_sigma
            )));
        }
        self.noise.validate()
    }
}

/// Quality function of the classical loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityKind {
    Ransac,
    Msac,
}

impl QualityKind {
    /// Largest residual that contributes to the quality at scale `sigma`.
    #[inline]
    pub fn gate(self, sigma: f64) -> f64 {
        match self {
            QualityKind::Ransac => sigma,
            QualityKind::Msac => 1.5 * sigma,
        }
    }

    #[inline]
    fn score(self, d: f64, sigma: f64) -> f64 {
        match self {
            QualityKind::Ransac => {
                if d < sigma {
                    1.0
                } else {
                    0.0
                }
            }
            QualityKind::Msac => {
                let gate = 2.25 * sigma * sigma;
                let d2 = d * d;
                if d2 < gate {
                    1.0 - d2 / gate
                } else {
                    0.0
                }
            }
        }
    }

    /// `(quality, inlier count)` of a residual vector.
    pub fn evaluate(self, residuals: &[f64], sigma: f64) -> (f64, usize) {
        let gate = self.gate(sigma);
        residuals.iter().fold((0.0, 0), |(q, c), &d| {
            (q + self.score(d, sigma), c + usize::from(d < gate))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ransac,
    Msac,
    LoRansac,
    LoMsac,
    Magsac,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ransac, Method::Msac, Method::LoRansac, Method::LoMsac, Method::Magsac];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ransac => "ransac",
            Method::Msac => "msac",
            Method::LoRansac => "lo-ransac",
            Method::LoMsac => "lo-msac",
            Method::Magsac => "magsac",
        }
    }

    /// Quality and local-optimization switch of a baseline; `None` for MAGSAC.
    pub fn baseline(self) -> Option<(QualityKind, bool)> {
        match self {
            Method::Ransac => Some((QualityKind::Ransac, false)),
            Method::Msac => Some((QualityKind::Msac, false)),
            Method::LoRansac => Some((QualityKind::Ransac, true)),
            Method::LoMsac => Some((QualityKind::Msac, true)),
            Method::Magsac => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Best quality after this iteration; `-∞` before any model was accepted.
    pub best_quality: f64,
    /// Iteration bound in force after this iteration.
    pub bound: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// `None` when no sample ever produced a valid model.
    pub model: Option<Model>,
    /// Quality of `model` under the estimator's own quality function.
    pub quality: f64,
    pub iterations: usize,
    pub samples_drawn: usize,
    /// Per-point σ-consensus weights of the returned model, when it came from σ-consensus.
    pub weights: Option<Vec<f64>>,
    /// Inliers of the returned model (orientation-consistent for F).
    pub inliers: Vec<usize>,
    pub wall_time: Duration,
    pub failed: bool,
    pub trace: Vec<TraceEntry>,
}

/// `m` distinct indices drawn uniformly from `0..n`.
pub fn draw_minimal_sample<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Vec<usize> {
    index::sample(rng, n, m).into_vec()
}

/// Unrounded `ln(1−η) / ln(1 − (c/n)^m)` with the ratio clamped away from 0 and 1.
fn iterations_for_ratio(inlier_count: usize, n: usize, m: usize, confidence: f64) -> f64 {
    let ratio = (inlier_count as f64 / n.max(1) as f64).clamp(1e-9, 1.0 - 1e-9);
    let p_good = ratio.powi(m as i32);
    (-confidence).ln_1p() / (-p_good).ln_1p()
}

fn clamp_iterations(k: f64, max_iterations: usize) -> usize {
    if !(k < max_iterations as f64) {
        return max_iterations.max(1);
    }
    (k.round() as usize).clamp(1, max_iterations.max(1))
}

/// Iterations needed to draw an all-inlier sample with confidence `η`,
/// rounded to the nearest integer and clamped to `[1, max_iterations]`.
pub fn standard_iteration_bound(
    inlier_count: usize,
    n: usize,
    m: usize,
    confidence: f64,
    max_iterations: usize,
) -> usize {
    clamp_iterations(iterations_for_ratio(inlier_count, n, m, confidence), max_iterations)
}

/// Standard bound averaged over `σ ~ U(0, σ_max)`: the inlier count is `i`
/// on `(σ_i, σ_{i+1})`, `0` below `σ_1` and `K` on the tail `(σ_K, σ_max)`.
/// Each per-σ bound is capped at `max_iterations` before averaging.
pub fn marginalized_iteration_bound(
    profile: &ResidualProfile,
    n: usize,
    m: usize,
    confidence: f64,
    noise: &NoiseModel,
    max_iterations: usize,
) -> usize {
    let cap = max_iterations as f64;
    let k_of = |c: usize| iterations_for_ratio(c, n, m, confidence).min(cap);
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in 0..=profile.k {
        let next = if i < profile.k {
            profile.sigma(i + 1, noise).min(noise.sigma_max)
        } else {
            noise.sigma_max
        };
        acc += (next - prev).max(0.0) * k_of(i);
        prev = next.max(prev);
    }
    clamp_iterations(acc / noise.sigma_max, max_iterations)
}

/// Early rejection of a hypothesis whose inlier count at the reference
/// threshold cannot reach that of the hypothesis behind the current best.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BailBound {
    pub threshold: f64,
    pub reference_count: usize,
}

/// Structural validity (invariants, oriented epipolar check for F on the
/// sample) followed by the streaming bail test when `bail` is given.
pub fn validate_model(
    model: &Model,
    points: &PointSet,
    problem: &ProblemDef,
    sample: &[usize],
    bail: Option<&BailBound>,
) -> bool {
    if !problem.is_model_valid(model, points, sample) {
        return false;
    }
    match bail {
        Some(b) => count_within_or_bail(model, points, problem, b).is_some(),
        None => true,
    }
}

/// Number of points within the bail threshold, or `None` once it is certain
/// to end below the reference count.
fn count_within_or_bail(model: &Model, points: &PointSet, problem: &ProblemDef, b: &BailBound) -> Option<usize> {
    let n = points.len();
    let mut count = 0;
    for (seen, p) in points.iter().enumerate() {
        if problem.residual(model, p) <= b.threshold {
            count += 1;
        }
        if count + (n - seen - 1) < b.reference_count {
            return None;
        }
    }
    Some(count)
}

fn check_inputs(points: &PointSet, problem: &ProblemDef, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    problem.check_points(points)?;
    if points.len() < problem.sample_size() {
        return Err(Error::InsufficientSupport {
            needed: problem.sample_size(),
            got: points.len(),
        });
    }
    Ok(())
}

fn reported_inliers(model: &Model, points: &PointSet, problem: &ProblemDef, threshold: f64) -> Vec<usize> {
    let inl: Vec<usize> = (0..points.len())
        .filter(|&i| problem.residual(model, points.point(i)) < threshold)
        .collect();
    match model {
        Model::Fundamental(f) => orientation_consistent(f, points, &inl),
        _ => inl,
    }
}

fn failed_result(iterations: usize, start: Instant, trace: Vec<TraceEntry>) -> EstimationResult {
    EstimationResult {
        model: None,
        quality: f64::NEG_INFINITY,
        iterations,
        samples_drawn: iterations,
        weights: None,
        inliers: Vec::new(),
        wall_time: start.elapsed(),
        failed: true,
        trace,
    }
}

/// Runs `method`, honouring `cfg.enable_post_sigma` for the baselines.
pub fn estimate(points: &PointSet, problem: &ProblemDef, cfg: &SolverConfig, method: Method) -> Result<EstimationResult> {
    match method.baseline() {
        None => magsac(points, problem, cfg),
        Some((quality, lo)) => ransac_family(points, problem, &SolverConfig { enable_lo: lo, ..*cfg }, quality),
    }
}

/// The MAGSAC loop: every valid minimal model is polished by σ-consensus
/// and the polished model is ranked by the marginalized χ quality.
pub fn magsac(points: &PointSet, problem: &ProblemDef, cfg: &SolverConfig) -> Result<EstimationResult> {
    check_inputs(points, problem, cfg)?;
    let start = Instant::now();
    let noise = NoiseModel::for_points(&cfg.noise, problem, points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m) = (points.len(), problem.sample_size());
    let bail_threshold = noise.tau(cfg.reference_sigma);

    struct Best {
        model: Model,
        quality: f64,
        weights: Vec<f64>,
        reference_count: usize,
    }
    let mut best: Option<Best> = None;
    let mut bound = cfg.max_iterations;
    let mut trace = Vec::new();
    let mut iteration = 0;
    let mut residuals = Vec::with_capacity(n);

    while iteration < cfg.max_iterations && iteration < bound.max(cfg.min_iterations) {
        iteration += 1;
        let sample = draw_minimal_sample(&mut rng, n, m);
        if problem.is_sample_nondegenerate(points, &sample) {
            for theta in problem.fit_minimal(points, &sample).unwrap_or_default() {
                if !problem.is_model_valid(&theta, points, &sample) {
                    continue;
                }
                let bail = BailBound {
                    threshold: bail_threshold,
                    reference_count: best.as_ref().map_or(0, |b| b.reference_count),
                };
                let Some(count) = count_within_or_bail(&theta, points, problem, &bail) else {
                    continue;
                };
                residuals.clear();
                residuals.extend(points.iter().map(|p| problem.residual(&theta, p)));
                let sc = sigma_consensus_with_residuals(points, &theta, &residuals, problem, &noise, cfg.parallelism);
                let profile = ResidualProfile::from_residuals(&problem.residuals(&sc.refined_model, points), &noise);
                let q = magsac_quality(&profile, &noise);
                if best.as_ref().is_none_or(|b| q > b.quality) {
                    bound = marginalized_iteration_bound(&profile, n, m, cfg.confidence, &noise, cfg.max_iterations);
                    best = Some(Best {
                        model: sc.refined_model,
                        quality: q,
                        weights: sc.weights,
                        reference_count: count,
                    });
                }
            }
        }
        if cfg.record_trace {
            trace.push(TraceEntry {
                iteration,
                best_quality: best.as_ref().map_or(f64::NEG_INFINITY, |b| b.quality),
                bound,
            });
        }
    }

    let Some(best) = best else {
        return Ok(failed_result(iteration, start, trace));
    };
    Ok(EstimationResult {
        inliers: reported_inliers(&best.model, points, problem, noise.tau_max()),
        model: Some(best.model),
        quality: best.quality,
        iterations: iteration,
        samples_drawn: iteration,
        weights: Some(best.weights),
        wall_time: start.elapsed(),
        failed: false,
        trace,
    })
}

/// Inner RANSAC over the inliers of `best_model`: `r` non-minimal fits on
/// random subsets of size `min(7m, ⌈|I|/2⌉)` (at least the solver floor),
/// keeping the best model under the outer quality. Returns the input when
/// nothing improves on it.
pub fn local_optimization<R: Rng + ?Sized>(
    points: &PointSet,
    best_model: &Model,
    problem: &ProblemDef,
    cfg: &SolverConfig,
    quality: QualityKind,
    rng: &mut R,
) -> Model {
    let sigma = cfg.loop_sigma;
    let residuals = problem.residuals(best_model, points);
    let (mut best_q, _) = quality.evaluate(&residuals, sigma);
    let gate = quality.gate(sigma);
    let inliers: Vec<usize> = (0..points.len()).filter(|&i| residuals[i] < gate).collect();
    let floor = problem.nonminimal_floor().max(problem.sample_size());
    if inliers.len() < floor {
        return *best_model;
    }
    let subset = (7 * problem.sample_size()).min(inliers.len().div_ceil(2)).max(floor);
    let mut best = *best_model;
    let mut buf = Vec::with_capacity(points.len());
    for _ in 0..cfg.inner_iterations {
        let picked: Vec<usize> = draw_minimal_sample(rng, inliers.len(), subset)
            .into_iter()
            .map(|k| inliers[k])
            .collect();
        let Ok(candidate) = problem.fit_weighted(points, &picked, None) else {
            continue;
        };
        buf.clear();
        buf.extend(points.iter().map(|p| problem.residual(&candidate, p)));
        let (q, _) = quality.evaluate(&buf, sigma);
        if q > best_q {
            best_q = q;
            best = candidate;
        }
    }
    best
}

/// RANSAC or MSAC with the fixed threshold `loop_sigma`, optional local
/// optimization, a final unweighted fit on the inliers, and optional
/// σ-consensus post-processing.
pub fn ransac_family(
    points: &PointSet,
    problem: &ProblemDef,
    cfg: &SolverConfig,
    quality: QualityKind,
) -> Result<EstimationResult> {
    check_inputs(points, problem, cfg)?;
    let start = Instant::now();
    let noise = if cfg.enable_post_sigma {
        Some(NoiseModel::for_points(&cfg.noise, problem, points)?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m) = (points.len(), problem.sample_size());
    let sigma = cfg.loop_sigma;

    let mut best: Option<(Model, f64)> = None;
    let mut lo_pending = false;
    let mut bound = cfg.max_iterations;
    let mut trace = Vec::new();
    let mut iteration = 0;
    let mut residuals = Vec::with_capacity(n);

    while iteration < cfg.max_iterations && iteration < bound.max(cfg.min_iterations) {
        iteration += 1;
        let sample = draw_minimal_sample(&mut rng, n, m);
        if problem.is_sample_nondegenerate(points, &sample) {
            for theta in problem.fit_minimal(points, &sample).unwrap_or_default() {
                if !problem.is_model_valid(&theta, points, &sample) {
                    continue;
                }
                residuals.clear();
                residuals.extend(points.iter().map(|p| problem.residual(&theta, p)));
                let (q, count) = quality.evaluate(&residuals, sigma);
                if best.is_none_or(|(_, bq)| q > bq) {
                    best = Some((theta, q));
                    bound = standard_iteration_bound(count, n, m, cfg.confidence, cfg.max_iterations);
                    lo_pending = cfg.enable_lo;
                }
            }
        }
        if lo_pending && iteration >= cfg.min_iterations {
            lo_pending = false;
            if let Some((model, q)) = best {
                let polished = local_optimization(points, &model, problem, cfg, quality, &mut rng);
                let res = problem.residuals(&polished, points);
                let (lq, count) = quality.evaluate(&res, sigma);
                if lq > q {
                    best = Some((polished, lq));
                    bound = standard_iteration_bound(count, n, m, cfg.confidence, cfg.max_iterations);
                }
            }
        }
        if cfg.record_trace {
            trace.push(TraceEntry {
                iteration,
                best_quality: best.map_or(f64::NEG_INFINITY, |b| b.1),
                bound,
            });
        }
    }

    let Some((mut model, _)) = best else {
        return Ok(failed_result(iteration, start, trace));
    };
    let gate = quality.gate(sigma);
    let inliers: Vec<usize> = (0..n)
        .filter(|&i| problem.residual(&model, points.point(i)) < gate)
        .collect();
    if inliers.len() >= problem.nonminimal_floor() {
        if let Ok(fitted) = problem.fit_weighted(points, &inliers, None) {
            model = fitted;
        }
    }
    let mut weights = None;
    if let Some(noise) = noise {
        let res = problem.residuals(&model, points);
        let sc = sigma_consensus_with_residuals(points, &model, &res, problem, &noise, cfg.parallelism);
        model = sc.refined_model;
        weights = Some(sc.weights);
    }
    let (q, _) = quality.evaluate(&problem.residuals(&model, points), sigma);
    Ok(EstimationResult {
        model: Some(model),
        quality: q,
        iterations: iteration,
        samples_drawn: iteration,
        weights,
        inliers: reported_inliers(&model, points, problem, gate),
        wall_time: start.elapsed(),
        failed: false,
        trace,
    })
}

/// σ-consensus post-processing of a finished baseline run: replaces the
/// model, weights, quality and inliers while keeping the iteration counts.
pub fn post_process_result(
    result: &EstimationResult,
    points: &PointSet,
    problem: &ProblemDef,
    cfg: &SolverConfig,
    quality: QualityKind,
) -> Result<EstimationResult> {
    let Some(model) = result.model else {
        return Ok(result.clone());
    };
    let start = Instant::now();
    let noise = NoiseModel::for_points(&cfg.noise, problem, points)?;
    let res = problem.residuals(&model, points);
    let sc = sigma_consensus_with_residuals(points, &model, &res, problem, &noise, cfg.parallelism);
    let refined = sc.refined_model;
    let (q, _) = quality.evaluate(&problem.residuals(&refined, points), cfg.loop_sigma);
    Ok(EstimationResult {
        model: Some(refined),
        quality: q,
        weights: Some(sc.weights),
        inliers: reported_inliers(&refined, points, problem, quality.gate(cfg.loop_sigma)),
        wall_time: result.wall_time + start.elapsed(),
        ..result.clone()
    })
}
