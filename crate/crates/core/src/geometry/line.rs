use nalgebra::{Matrix2, SymmetricEigen};

use super::model::{Line2D, Model};
use super::weighted_support;
use crate::error::{Error, Result};
use crate::points::PointSet;

/// Minimum separation of the two points defining a line.
pub const COINCIDENCE_EPS: f64 = 1e-12;

/// Line through two distinct points.
pub fn line_from_two_points(p1: &[f64], p2: &[f64]) -> Result<Line2D> {
    let (x1, y1, x2, y2) = (p1[0], p1[1], p2[0], p2[1]);
    if (x2 - x1).hypot(y2 - y1) <= COINCIDENCE_EPS {
        return Err(Error::DegenerateSample("line points coincide"));
    }
    Line2D::new(y1 - y2, x2 - x1, x1 * y2 - x2 * y1)
}

#[inline]
pub fn line_residual(line: &Line2D, p: &[f64]) -> f64 {
    line.distance(p[0], p[1])
}

/// Weighted orthogonal (total) least-squares line.
pub(crate) fn fit_line(points: &PointSet, indices: &[usize], weights: Option<&[f64]>) -> Result<Line2D> {
    let support = weighted_support(indices, weights);
    let got = support.clone().count();
    if got < 2 {
        return Err(Error::InsufficientSupport { needed: 2, got });
    }
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (i, w) in support.clone() {
        let p = points.point(i);
        sw += w;
        sx += w * p[0];
        sy += w * p[1];
    }
    let (cx, cy) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (i, w) in support {
        let p = points.point(i);
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
    }
    if sxx + syy <= COINCIDENCE_EPS * COINCIDENCE_EPS * sw {
        return Err(Error::DegenerateSample("line points coincide"));
    }
    let eig = SymmetricEigen::new(Matrix2::new(sxx, sxy, sxy, syy));
    let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let n = eig.eigenvectors.column(k);
    Line2D::new(n[0], n[1], -(n[0] * cx + n[1] * cy))
}

/// Weighted least-squares line over all points (`weights` per point).
pub fn line_weighted(points: &PointSet, weights: &[f64]) -> Result<Model> {
    let idx: Vec<usize> = (0..points.len()).collect();
    fit_line(points, &idx, Some(weights)).map(Model::from)
}
