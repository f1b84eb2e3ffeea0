//! Data models, minimal and weighted solvers, and residuals for the three
//! supported problems: 2D lines, homographies and fundamental matrices.

mod fundamental;
mod homography;
mod line;
pub mod linalg;
mod model;

use serde::{Deserialize, Serialize};

pub use fundamental::{
    epipolar_algebraic, fundamental_minimal, fundamental_weighted, no_five_collinear,
    orientation_consistent, oriented_epipolar_check, sampson_distance,
};
pub use homography::{
    four_points_in_general_position, homography_minimal, homography_residual,
    homography_symmetric_residual, homography_weighted,
};
pub use line::{line_from_two_points, line_residual, line_weighted, COINCIDENCE_EPS};
pub use model::{FundamentalMatrix, Homography, Line2D, Model, MODEL_INVARIANT_TOL};

use crate::error::{Error, Result};
use crate::points::PointSet;

/// Triangle area below which three points count as collinear.
pub const COLLINEARITY_AREA_EPS: f64 = 1e-9;

#[inline]
pub(crate) fn triangle_area(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).abs()
}

/// `(index, weight)` pairs with strictly positive weight. Without weights
/// every index gets weight 1.
pub(crate) fn weighted_support<'a>(
    indices: &'a [usize],
    weights: Option<&'a [f64]>,
) -> impl Iterator<Item = (usize, f64)> + Clone + 'a {
    indices
        .iter()
        .enumerate()
        .map(move |(k, &i)| (i, weights.map_or(1.0, |w| w[k])))
        .filter(|&(_, w)| w > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Line2D,
    Homography,
    Fundamental,
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "line2d" | "line" => Ok(ProblemKind::Line2D),
            "homography" | "h" => Ok(ProblemKind::Homography),
            "fundamental" | "f" => Ok(ProblemKind::Fundamental),
            other => Err(Error::InvalidInput(format!("unknown problem '{other}'"))),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::Line2D => "line2d",
            ProblemKind::Homography => "homography",
            ProblemKind::Fundamental => "fundamental",
        })
    }
}

/// Everything an estimator needs to know about a problem: sample size,
/// residual dimension, solvers, residual and validity tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDef {
    pub kind: ProblemKind,
    /// Dimension of the residual space; selects the χ density of inlier residuals.
    pub rho: u32,
}

impl ProblemDef {
    pub fn new(kind: ProblemKind) -> Self {
        let rho = match kind {
            ProblemKind::Line2D => 1,
            ProblemKind::Homography | ProblemKind::Fundamental => 2,
        };
        Self { kind, rho }
    }

    pub fn line2d() -> Self {
        Self::new(ProblemKind::Line2D)
    }

    pub fn homography() -> Self {
        Self::new(ProblemKind::Homography)
    }

    pub fn fundamental() -> Self {
        Self::new(ProblemKind::Fundamental)
    }

    pub fn with_rho(mut self, rho: u32) -> Result<Self> {
        if !(1..=4).contains(&rho) {
            return Err(Error::InvalidConfig(format!("rho must be in 1..=4, got {rho}")));
        }
        self.rho = rho;
        Ok(self)
    }

    /// Minimal sample size `m`.
    pub fn sample_size(&self) -> usize {
        match self.kind {
            ProblemKind::Line2D => 2,
            ProblemKind::Homography => 4,
            ProblemKind::Fundamental => 7,
        }
    }

    /// Fewest points the non-minimal (weighted) solver accepts.
    pub fn nonminimal_floor(&self) -> usize {
        match self.kind {
            ProblemKind::Line2D => 2,
            ProblemKind::Homography => 4,
            ProblemKind::Fundamental => 8,
        }
    }

    /// Coordinates per data point.
    pub fn point_dim(&self) -> usize {
        match self.kind {
            ProblemKind::Line2D => 2,
            ProblemKind::Homography | ProblemKind::Fundamental => 4,
        }
    }

    pub fn check_points(&self, points: &PointSet) -> Result<()> {
        if points.dim() != self.point_dim() {
            return Err(Error::InvalidInput(format!(
                "{} expects {}-dimensional points, got {}",
                self.kind,
                self.point_dim(),
                points.dim()
            )));
        }
        Ok(())
    }

    /// Point-to-model residual in pixels; `+∞` when undefined.
    #[inline]
    pub fn residual(&self, model: &Model, p: &[f64]) -> f64 {
        match model {
            Model::Line2D(l) => line_residual(l, p),
            Model::Homography(h) => homography_residual(h, p),
            Model::Fundamental(f) => sampson_distance(f, p),
        }
    }

    pub fn residuals(&self, model: &Model, points: &PointSet) -> Vec<f64> {
        points.iter().map(|p| self.residual(model, p)).collect()
    }

    /// Whether `sample` (of size `m`) can determine a model.
    pub fn is_sample_nondegenerate(&self, points: &PointSet, sample: &[usize]) -> bool {
        let pts: Vec<&[f64]> = sample.iter().map(|&i| points.point(i)).collect();
        match self.kind {
            ProblemKind::Line2D => {
                pts.len() == 2 && (pts[0][0] - pts[1][0]).hypot(pts[0][1] - pts[1][1]) > COINCIDENCE_EPS
            }
            ProblemKind::Homography => {
                pts.len() == 4 && four_points_in_general_position([pts[0], pts[1], pts[2], pts[3]])
            }
            ProblemKind::Fundamental => pts.len() == 7 && no_five_collinear(&pts),
        }
    }

    /// Minimal solver; the seven-point solver may return up to three models.
    pub fn fit_minimal(&self, points: &PointSet, sample: &[usize]) -> Result<Vec<Model>> {
        if sample.len() != self.sample_size() {
            return Err(Error::InvalidInput(format!(
                "minimal sample must have {} points, got {}",
                self.sample_size(),
                sample.len()
            )));
        }
        let p = |k: usize| points.point(sample[k]);
        match self.kind {
            ProblemKind::Line2D => Ok(vec![line_from_two_points(p(0), p(1))?.into()]),
            ProblemKind::Homography => Ok(vec![homography_minimal([p(0), p(1), p(2), p(3)])?.into()]),
            ProblemKind::Fundamental => Ok(fundamental_minimal([p(0), p(1), p(2), p(3), p(4), p(5), p(6)])?
                .into_iter()
                .map(Model::from)
                .collect()),
        }
    }

    /// Weighted least-squares fit over `indices`; `weights[k]` belongs to
    /// `indices[k]`, unit weights when `None`. Zero weights are skipped.
    pub fn fit_weighted(&self, points: &PointSet, indices: &[usize], weights: Option<&[f64]>) -> Result<Model> {
        if let Some(w) = weights {
            if w.len() != indices.len() {
                return Err(Error::InvalidInput("weights and indices differ in length".into()));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
            }
        }
        match self.kind {
            ProblemKind::Line2D => line::fit_line(points, indices, weights).map(Model::from),
            ProblemKind::Homography => homography::fit_homography(points, indices, weights).map(Model::from),
            ProblemKind::Fundamental => fundamental::fit_fundamental(points, indices, weights).map(Model::from),
        }
    }

    /// Structural validity of a model hypothesis: normalization invariants,
    /// and for fundamental matrices the oriented epipolar constraint on the
    /// sample that produced it.
    pub fn is_model_valid(&self, model: &Model, points: &PointSet, sample: &[usize]) -> bool {
        if !model.satisfies_invariants() {
            return false;
        }
        match (self.kind, model) {
            (ProblemKind::Line2D, Model::Line2D(_)) | (ProblemKind::Homography, Model::Homography(_)) => true,
            (ProblemKind::Fundamental, Model::Fundamental(f)) => {
                oriented_epipolar_check(f, sample.iter().map(|&i| points.point(i)))
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_parameters() {
        assert_eq!(ProblemDef::line2d().sample_size(), 2);
        assert_eq!(ProblemDef::homography().sample_size(), 4);
        assert_eq!(ProblemDef::fundamental().sample_size(), 7);
        assert_eq!(ProblemDef::fundamental().nonminimal_floor(), 8);
        assert_eq!(ProblemDef::line2d().rho, 1);
        assert_eq!(ProblemDef::homography().rho, 2);
        assert_eq!(ProblemDef::homography().with_rho(4).unwrap().rho, 4);
        assert!(ProblemDef::homography().with_rho(0).is_err());
        assert_eq!("Homography".parse::<ProblemKind>().unwrap(), ProblemKind::Homography);
        assert!("essential".parse::<ProblemKind>().is_err());
    }

    #[test]
    fn homography_degeneracy_test() {
        let ps = PointSet::from_points(&[
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 5.0, 0.0],
            [2.0, 2.0, 0.0, 5.0],
            [3.0, 0.0, 7.0, 9.0],
            [0.0, 4.0, 1.0, 8.0],
        ])
        .unwrap();
        let h = ProblemDef::homography();
        assert!(!h.is_sample_nondegenerate(&ps, &[0, 1, 2, 3]));
        assert!(h.is_sample_nondegenerate(&ps, &[0, 1, 3, 4]));
    }

    #[test]
    fn line_degeneracy_test() {
        let ps = PointSet::from_points(&[[1.0, 1.0], [1.0, 1.0], [2.0, 1.0]]).unwrap();
        let l = ProblemDef::line2d();
        assert!(!l.is_sample_nondegenerate(&ps, &[0, 1]));
        assert!(l.is_sample_nondegenerate(&ps, &[0, 2]));
    }
}
