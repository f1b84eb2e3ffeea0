use nalgebra::{Matrix3, SMatrix, SVector};

use super::linalg::{nullspace_rows, smallest_eigenvector, Normalizer};
use super::model::{Homography, Model};
use super::{triangle_area, weighted_support, COLLINEARITY_AREA_EPS};
use crate::error::{Error, Result};
use crate::points::PointSet;

#[inline]
fn dlt_rows(x: f64, y: f64, u: f64, v: f64) -> [[f64; 9]; 2] {
    [
        [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u],
        [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v],
    ]
}

fn denormalize(h: &SVector<f64, 9>, n1: &Normalizer, n2: &Normalizer) -> Result<Homography> {
    let hn = Matrix3::from_row_slice(h.as_slice());
    Homography::from_matrix(n2.inverse_matrix() * hn * n1.matrix())
}

/// True when no three of the four points are collinear, in either image.
pub fn four_points_in_general_position(pts: [&[f64]; 4]) -> bool {
    for offset in [0usize, 2] {
        for skip in 0..4 {
            let tri: Vec<&[f64]> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
            let area = triangle_area(
                (tri[0][offset], tri[0][offset + 1]),
                (tri[1][offset], tri[1][offset + 1]),
                (tri[2][offset], tri[2][offset + 1]),
            );
            if area <= COLLINEARITY_AREA_EPS {
                return false;
            }
        }
    }
    true
}

/// Normalized four-point DLT.
pub fn homography_minimal(sample: [&[f64]; 4]) -> Result<Homography> {
    if !four_points_in_general_position(sample) {
        return Err(Error::DegenerateSample("three collinear points"));
    }
    let n1 = Normalizer::fit(sample.iter().map(|p| (p[0], p[1], 1.0)))?;
    let n2 = Normalizer::fit(sample.iter().map(|p| (p[2], p[3], 1.0)))?;
    let mut a = [[0.0; 9]; 8];
    for (k, p) in sample.iter().enumerate() {
        let (x, y) = n1.apply(p[0], p[1]);
        let (u, v) = n2.apply(p[2], p[3]);
        let [r1, r2] = dlt_rows(x, y, u, v);
        a[2 * k] = r1;
        a[2 * k + 1] = r2;
    }
    let h = nullspace_rows(a)?;
    denormalize(&h[0], &n1, &n2)
}

pub(crate) fn fit_homography(
    points: &PointSet,
    indices: &[usize],
    weights: Option<&[f64]>,
) -> Result<Homography> {
    let support = weighted_support(indices, weights);
    let got = support.clone().count();
    if got < 4 {
        return Err(Error::InsufficientSupport { needed: 4, got });
    }
    let n1 = Normalizer::fit(support.clone().map(|(i, w)| {
        let p = points.point(i);
        (p[0], p[1], w)
    }))?;
    let n2 = Normalizer::fit(support.clone().map(|(i, w)| {
        let p = points.point(i);
        (p[2], p[3], w)
    }))?;
    let mut ata = SMatrix::<f64, 9, 9>::zeros();
    for (i, w) in support {
        let p = points.point(i);
        let (x, y) = n1.apply(p[0], p[1]);
        let (u, v) = n2.apply(p[2], p[3]);
        for row in dlt_rows(x, y, u, v) {
            let r = SVector::<f64, 9>::from_row_slice(&row);
            ata.syger(w, &r, &r, 1.0);
        }
    }
    let h = smallest_eigenvector(ata)?;
    denormalize(&h, &n1, &n2)
}

/// Weighted normalized DLT over all correspondences (`weights` per point).
pub fn homography_weighted(points: &PointSet, weights: &[f64]) -> Result<Model> {
    let idx: Vec<usize> = (0..points.len()).collect();
    fit_homography(points, &idx, Some(weights)).map(Model::from)
}

/// One-directional transfer error `|H·p1 − p2|`; `+∞` when `p1` maps to infinity.
#[inline]
pub fn homography_residual(h: &Homography, p: &[f64]) -> f64 {
    match h.transfer(p[0], p[1]) {
        Some((x, y)) => {
            let (dx, dy) = (x - p[2], y - p[3]);
            (dx * dx + dy * dy).sqrt()
        }
        None => f64::INFINITY,
    }
}

/// Symmetric transfer error: mean of forward and backward distances.
pub fn homography_symmetric_residual(h: &Homography, p: &[f64]) -> f64 {
    let forward = homography_residual(h, p);
    let Some(inv) = h.matrix().try_inverse() else {
        return f64::INFINITY;
    };
    let Ok(hinv) = Homography::from_matrix(inv) else {
        return f64::INFINITY;
    };
    let backward = homography_residual(&hinv, &[p[2], p[3], p[0], p[1]]);
    0.5 * (forward + backward)
}
