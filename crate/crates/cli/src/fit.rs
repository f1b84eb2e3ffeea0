//! Single-dataset fits.

use std::fmt;

use magsac_core::estimators::post_process_result;
use magsac_core::{estimate, evaluate, Model, PointSet, ProblemDef, ProblemKind};
use serde::Serialize;

use crate::bench::duration_ms_of;
use crate::config::BenchConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub problem: ProblemKind,
    pub method: String,
    /// `(a, b, c)` for a line, the row-major 3×3 matrix otherwise.
    pub model: Option<Vec<f64>>,
    pub quality: f64,
    pub iterations: usize,
    pub samples: usize,
    pub inliers: usize,
    pub time_ms: f64,
    /// Present when the dataset carries ground-truth labels.
    pub error_rms: Option<f64>,
    pub failed: bool,
}

pub fn model_parameters(model: &Model) -> Vec<f64> {
    match model {
        Model::Line2D(l) => {
            let (a, b, c) = l.coefficients();
            vec![a, b, c]
        }
        _ => model.as_matrix().transpose().iter().copied().collect(),
    }
}

/// Runs the single configured method (with σ-consensus post-processing
/// when enabled) and evaluates against labels when present.
pub fn fit(points: &PointSet, cfg: &BenchConfig) -> Result<FitReport> {
    let [method] = cfg.methods[..] else {
        return Err(CliError::Config {
            line: 0,
            message: format!("fit takes exactly one method, got {}", cfg.methods.len()),
        });
    };
    let problem = ProblemDef::new(cfg.problem);
    let mut result = estimate(points, &problem, &cfg.solver, method)?;
    let mut name = method.name().to_string();
    if let (true, Some((quality, _))) = (cfg.post_sigma, method.baseline()) {
        result = post_process_result(&result, points, &problem, &cfg.solver, quality)?;
        name.push_str("+sigma");
    }
    let eval = match (&result.model, points.gt_inlier_mask()) {
        (Some(m), Some(_)) => Some(evaluate(m, points, &problem, cfg.failure_threshold)?),
        _ => None,
    };
    Ok(FitReport {
        problem: cfg.problem,
        method: name,
        model: result.model.as_ref().map(model_parameters),
        quality: result.quality,
        iterations: result.iterations,
        samples: result.samples_drawn,
        inliers: result.inliers.len(),
        time_ms: duration_ms_of(result.wall_time),
        error_rms: eval.map(|e| e.error_rms),
        failed: result.model.is_none() || eval.is_some_and(|e| e.failed),
    })
}

impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem    {}", self.problem)?;
        writeln!(f, "method     {}", self.method)?;
        match &self.model {
            Some(p) if p.len() == 9 => {
                for row in p.chunks(3) {
                    writeln!(f, "model      {:>14.6e} {:>14.6e} {:>14.6e}", row[0], row[1], row[2])?;
                }
            }
            Some(p) => writeln!(f, "model      {p:?}")?,
            None => writeln!(f, "model      none")?,
        }
        writeln!(f, "quality    {:.6}", self.quality)?;
        writeln!(f, "iterations {}", self.iterations)?;
        writeln!(f, "inliers    {}", self.inliers)?;
        writeln!(f, "time_ms    {:.3}", self.time_ms)?;
        if let Some(e) = self.error_rms {
            writeln!(f, "error_rms  {e:.6}")?;
        }
        write!(f, "failed     {}", self.failed)
    }
}
