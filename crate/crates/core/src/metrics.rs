//! Evaluation of an estimated model against the ground-truth inlier set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Model, ProblemDef};
use crate::points::PointSet;

/// Runs with an RMS error above this many pixels count as failures.
pub const DEFAULT_FAILURE_THRESHOLD: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// RMS residual over the ground-truth inliers; NaN when there are none.
    pub error_rms: f64,
    pub failed: bool,
}

impl Evaluation {
    /// The record of a run that returned no model.
    pub fn no_model() -> Self {
        Self {
            error_rms: f64::NAN,
            failed: true,
        }
    }
}

/// RMS of the problem residual (re-projection error for H, Sampson distance
/// for F, point-line distance for lines) over the ground-truth inliers.
pub fn evaluate(model: &Model, points: &PointSet, problem: &ProblemDef, failure_threshold: f64) -> Result<Evaluation> {
    let inliers = points.gt_inlier_indices().ok_or(Error::MissingGroundTruth)?;
    if inliers.is_empty() {
        return Ok(Evaluation::no_model());
    }
    let sq: f64 = inliers
        .iter()
        .map(|&i| problem.residual(model, points.point(i)).powi(2))
        .sum();
    let error_rms = (sq / inliers.len() as f64).sqrt();
    Ok(Evaluation {
        error_rms,
        failed: !(error_rms <= failure_threshold),
    })
}
