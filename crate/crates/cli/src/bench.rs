//! Benchmark sweeps: every method variant on every scene for every run, with
//! one solver seed per run shared by all variants.

use std::time::Duration;

use magsac_core::estimators::post_process_result;
use magsac_core::synthetic::{
    generate_fundamental_scene, generate_homography_scene, generate_line_scene, BoundingBox,
};
use magsac_core::{estimate, evaluate, EstimationResult, Evaluation, Method, PointSet, ProblemDef, ProblemKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::BenchConfig;

/// A reported method: a base estimator, optionally followed by σ-consensus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variant {
    pub name: String,
    pub method: Method,
    pub post_sigma: bool,
}

/// Base methods in configured order, each baseline followed by its `+sigma`
/// variant when post-processing is enabled.
pub fn variants(cfg: &BenchConfig) -> Vec<Variant> {
    let mut out = Vec::new();
    for &method in &cfg.methods {
        out.push(Variant {
            name: method.name().to_string(),
            method,
            post_sigma: false,
        });
        if cfg.post_sigma && method.baseline().is_some() {
            out.push(Variant {
                name: format!("{}+sigma", method.name()),
                method,
                post_sigma: true,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SceneSource {
    /// A fresh synthetic scene is generated for every run.
    Synthetic { noise_sigma: f64, outlier_ratio: f64 },
    /// A fixed dataset with ground-truth labels.
    Dataset(#[serde(skip)] PointSet),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scene {
    pub name: String,
    pub source: SceneSource,
}

/// The noise × outlier grid of a synthetic sweep.
pub fn synthetic_scenes(cfg: &BenchConfig) -> Vec<Scene> {
    let mut scenes = Vec::new();
    for &noise_sigma in &cfg.noise_levels {
        for &outlier_ratio in &cfg.outlier_ratios {
            scenes.push(Scene {
                name: format!("{}_noise{noise_sigma}_out{outlier_ratio}", cfg.problem),
                source: SceneSource::Synthetic { noise_sigma, outlier_ratio },
            });
        }
    }
    scenes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub method: String,
    pub scene: String,
    pub run: usize,
    /// RMS error over ground-truth inliers; NaN when no model was returned.
    pub error_rms: f64,
    pub time_ms: f64,
    pub samples: usize,
    pub failed: bool,
}

/// A run that could not be executed at all.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub method: String,
    pub scene: String,
    pub run: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

/// Seed of the solver in run `run`; identical across methods and scenes.
pub fn solver_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add(run as u64)
}

/// Seed of the synthetic scene of `(scene, run)`.
pub fn scene_seed(base: u64, scene: usize, run: usize) -> u64 {
    base.wrapping_add(((scene as u64) << 32) | run as u64)
}

pub fn generate_points(problem: ProblemKind, noise: f64, ratio: f64, n: usize, seed: u64) -> magsac_core::Result<PointSet> {
    let scene = match problem {
        ProblemKind::Line2D => generate_line_scene(noise, ratio, n, BoundingBox::default(), seed)?,
        ProblemKind::Homography => generate_homography_scene(noise, ratio, n, seed)?,
        ProblemKind::Fundamental => generate_fundamental_scene(noise, ratio, n, seed)?,
    };
    Ok(scene.correspondences)
}

fn record(variant: &Variant, scene: &str, run: usize, result: &EstimationResult, eval: Evaluation) -> RunRecord {
    RunRecord {
        method: variant.name.clone(),
        scene: scene.to_string(),
        run,
        error_rms: eval.error_rms,
        time_ms: duration_ms_of(result.wall_time),
        samples: result.samples_drawn,
        failed: eval.failed,
    }
}

pub fn duration_ms_of(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn failed_record(variant: &Variant, scene: &str, run: usize) -> RunRecord {
    RunRecord {
        method: variant.name.clone(),
        scene: scene.to_string(),
        run,
        error_rms: f64::NAN,
        time_ms: 0.0,
        samples: 0,
        failed: true,
    }
}

fn score(result: &EstimationResult, points: &PointSet, problem: &ProblemDef, cfg: &BenchConfig) -> magsac_core::Result<Evaluation> {
    match &result.model {
        Some(m) => evaluate(m, points, problem, cfg.failure_threshold),
        None => Ok(Evaluation::no_model()),
    }
}

/// Runs every variant once on `points` with the solver seed of `run`.
/// A `+sigma` variant post-processes the result of its base run, so both
/// report the same samples.
pub fn run_variants(
    points: &PointSet,
    cfg: &BenchConfig,
    variants: &[Variant],
    scene: &str,
    run: usize,
) -> Vec<(RunRecord, Option<String>)> {
    let problem = ProblemDef::new(cfg.problem);
    let solver = magsac_core::SolverConfig {
        seed: solver_seed(cfg.solver.seed, run),
        enable_post_sigma: false,
        ..cfg.solver
    };
    let mut base: Option<(Method, magsac_core::Result<EstimationResult>)> = None;
    let mut out = Vec::with_capacity(variants.len());
    for v in variants {
        if base.as_ref().is_none_or(|(m, _)| *m != v.method) {
            base = Some((v.method, estimate(points, &problem, &solver, v.method)));
        }
        let (_, base_result) = base.as_ref().expect("base run present");
        let result = match (base_result, v.post_sigma, v.method.baseline()) {
            (Err(e), _, _) => Err(e.clone()),
            (Ok(r), true, Some((quality, _))) => post_process_result(r, points, &problem, &solver, quality),
            (Ok(r), _, _) => Ok(r.clone()),
        };
        let scored = result.and_then(|r| score(&r, points, &problem, cfg).map(|e| (r, e)));
        out.push(match scored {
            Ok((r, e)) => (record(v, scene, run, &r, e), None),
            Err(e) => (failed_record(v, scene, run), Some(e.to_string())),
        });
    }
    out
}

/// Executes the sweep. Runs may execute in parallel; records come out in
/// `(method, scene, run)` order regardless.
pub fn run_sweep(cfg: &BenchConfig, scenes: &[Scene]) -> BenchOutcome {
    let variants = variants(cfg);
    let jobs: Vec<(usize, usize)> = (0..scenes.len())
        .flat_map(|s| (0..cfg.runs).map(move |r| (s, r)))
        .collect();
    let results: Vec<Vec<(RunRecord, Option<String>)>> = jobs
        .par_iter()
        .map(|&(s, run)| {
            let scene = &scenes[s];
            let points = match &scene.source {
                SceneSource::Dataset(p) => Ok(p.clone()),
                SceneSource::Synthetic { noise_sigma, outlier_ratio } => generate_points(
                    cfg.problem,
                    *noise_sigma,
                    *outlier_ratio,
                    cfg.points,
                    scene_seed(cfg.solver.seed, s, run),
                ),
            };
            match points {
                Ok(p) => run_variants(&p, cfg, &variants, &scene.name, run),
                Err(e) => variants
                    .iter()
                    .map(|v| (failed_record(v, &scene.name, run), Some(e.to_string())))
                    .collect(),
            }
        })
        .collect();

    let mut outcome = BenchOutcome::default();
    for k in 0..variants.len() {
        for per_run in &results {
            let (rec, err) = &per_run[k];
            if let Some(message) = err {
                outcome.failures.push(RunFailure {
                    method: rec.method.clone(),
                    scene: rec.scene.clone(),
                    run: rec.run,
                    message: message.clone(),
                });
            }
            outcome.records.push(rec.clone());
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_order() {
        let cfg = BenchConfig {
            methods: vec![Method::Ransac, Method::Magsac, Method::LoMsac],
            post_sigma: true,
            ..Default::default()
        };
        let names: Vec<String> = variants(&cfg).into_iter().map(|v| v.name).collect();
        assert_eq!(names, ["ransac", "ransac+sigma", "magsac", "lo-msac", "lo-msac+sigma"]);
    }

    #[test]
    fn seeds_are_distinct_per_scene_and_run() {
        assert_ne!(scene_seed(1, 0, 1), scene_seed(1, 1, 0));
        assert_eq!(solver_seed(5, 2), 7);
    }
}
