use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use super::linalg::{nullspace_rows, real_cubic_roots, smallest_eigenvector, Normalizer};
use super::model::{FundamentalMatrix, Model};
use super::{triangle_area, weighted_support, COLLINEARITY_AREA_EPS};
use crate::error::{Error, Result};
use crate::points::PointSet;

/// Below this squared gradient norm the Sampson distance is treated as infinite.
pub const SAMPSON_GRADIENT_EPS: f64 = 1e-15;

#[inline]
fn epipolar_row(x: f64, y: f64, u: f64, v: f64) -> [f64; 9] {
    [u * x, u * y, u, v * x, v * y, v, x, y, 1.0]
}

/// True unless five or more of the points are collinear in either image.
pub fn no_five_collinear(pts: &[&[f64]]) -> bool {
    let n = pts.len();
    for offset in [0usize, 2] {
        let xy = |i: usize| (pts[i][offset], pts[i][offset + 1]);
        for i in 0..n {
            for j in (i + 1)..n {
                let on_line = (0..n)
                    .filter(|&k| k != i && k != j)
                    .filter(|&k| triangle_area(xy(i), xy(j), xy(k)) <= COLLINEARITY_AREA_EPS)
                    .count();
                if on_line + 2 >= 5 {
                    return false;
                }
            }
        }
    }
    true
}

/// Seven-point solver; returns every real solution of the cubic constraint.
pub fn fundamental_minimal(sample: [&[f64]; 7]) -> Result<Vec<FundamentalMatrix>> {
    if !no_five_collinear(&sample) {
        return Err(Error::DegenerateSample("five collinear points"));
    }
    let n1 = Normalizer::fit(sample.iter().map(|p| (p[0], p[1], 1.0)))?;
    let n2 = Normalizer::fit(sample.iter().map(|p| (p[2], p[3], 1.0)))?;
    let mut a = [[0.0; 9]; 7];
    for (row, p) in a.iter_mut().zip(sample.iter()) {
        let (x, y) = n1.apply(p[0], p[1]);
        let (u, v) = n2.apply(p[2], p[3]);
        *row = epipolar_row(x, y, u, v);
    }
    let basis = nullspace_rows(a)?;
    let f1 = Matrix3::from_row_slice(basis[0].as_slice());
    let f2 = Matrix3::from_row_slice(basis[1].as_slice());

    // det(α·F1 + (1 − α)·F2) is a cubic in α; recover its coefficients by
    // interpolation at four abscissae.
    let det_at = |alpha: f64| (f1 * alpha + f2 * (1.0 - alpha)).determinant();
    let (p0, p1, pm1, p2) = (det_at(0.0), det_at(1.0), det_at(-1.0), det_at(2.0));
    let c0 = p0;
    let c2 = 0.5 * (p1 + pm1) - c0;
    let odd = 0.5 * (p1 - pm1);
    let c3 = (p2 - 4.0 * c2 - c0 - 2.0 * odd) / 6.0;
    let c1 = odd - c3;

    let denorm = n2.matrix().transpose();
    let t1 = n1.matrix();
    let mut out = Vec::with_capacity(3);
    for alpha in real_cubic_roots([c0, c1, c2, c3]) {
        let fnorm = f1 * alpha + f2 * (1.0 - alpha);
        if let Ok(f) = FundamentalMatrix::from_matrix(denorm * fnorm * t1) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(Error::NumericalFailure("seven-point cubic has no real root"));
    }
    Ok(out)
}

pub(crate) fn fit_fundamental(
    points: &PointSet,
    indices: &[usize],
    weights: Option<&[f64]>,
) -> Result<FundamentalMatrix> {
    let support = weighted_support(indices, weights);
    let got = support.clone().count();
    if got < 8 {
        return Err(Error::InsufficientSupport { needed: 8, got });
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
        let r = SVector::<f64, 9>::from_row_slice(&epipolar_row(x, y, u, v));
        ata.syger(w, &r, &r, 1.0);
    }
    let f = smallest_eigenvector(ata)?;
    // Rank-2 truncation in normalized coordinates; denormalization keeps rank.
    let fnorm = *FundamentalMatrix::from_matrix(Matrix3::from_row_slice(f.as_slice()))?.matrix();
    FundamentalMatrix::from_matrix(n2.matrix().transpose() * fnorm * n1.matrix())
}

/// Weighted normalized eight-point fit over all correspondences.
pub fn fundamental_weighted(points: &PointSet, weights: &[f64]) -> Result<Model> {
    let idx: Vec<usize> = (0..points.len()).collect();
    fit_fundamental(points, &idx, Some(weights)).map(Model::from)
}

/// Algebraic epipolar residual `x2ᵀ F x1`.
#[inline]
pub fn epipolar_algebraic(f: &FundamentalMatrix, p: &[f64]) -> f64 {
    let x1 = Vector3::new(p[0], p[1], 1.0);
    let x2 = Vector3::new(p[2], p[3], 1.0);
    x2.dot(&(f.matrix() * x1))
}

/// First-order geometric (Sampson) distance in pixels.
#[inline]
pub fn sampson_distance(f: &FundamentalMatrix, p: &[f64]) -> f64 {
    let m = f.matrix();
    let x1 = Vector3::new(p[0], p[1], 1.0);
    let x2 = Vector3::new(p[2], p[3], 1.0);
    let fx1 = m * x1;
    let ftx2 = m.tr_mul(&x2);
    let grad = fx1[0] * fx1[0] + fx1[1] * fx1[1] + ftx2[0] * ftx2[0] + ftx2[1] * ftx2[1];
    if grad <= SAMPSON_GRADIENT_EPS {
        return f64::INFINITY;
    }
    x2.dot(&fx1).abs() / grad.sqrt()
}

/// Orientation sign `(e1 × x1)·(Fᵀ x2)` of one correspondence, with `e1` the
/// right epipole.
#[inline]
fn orientation(f: &FundamentalMatrix, e1: &Vector3<f64>, p: &[f64]) -> f64 {
    let x1 = Vector3::new(p[0], p[1], 1.0);
    let x2 = Vector3::new(p[2], p[3], 1.0);
    e1.cross(&x1).dot(&f.matrix().tr_mul(&x2))
}

/// Oriented epipolar constraint: all candidates must share one orientation sign.
pub fn oriented_epipolar_check<'a>(
    f: &FundamentalMatrix,
    candidates: impl IntoIterator<Item = &'a [f64]>,
) -> bool {
    let e1 = f.right_epipole();
    if !e1.iter().all(|v| v.is_finite()) {
        return false;
    }
    let mut reference = 0.0;
    for p in candidates {
        let s = orientation(f, &e1, p);
        if s == 0.0 {
            continue;
        }
        if reference == 0.0 {
            reference = s.signum();
        } else if s.signum() != reference {
            return false;
        }
    }
    true
}

/// Indices of `candidates` sharing the majority orientation sign.
pub fn orientation_consistent(f: &FundamentalMatrix, points: &PointSet, candidates: &[usize]) -> Vec<usize> {
    let e1 = f.right_epipole();
    let signs: Vec<f64> = candidates
        .iter()
        .map(|&i| orientation(f, &e1, points.point(i)))
        .collect();
    let positive = signs.iter().filter(|s| **s > 0.0).count();
    let negative = signs.iter().filter(|s| **s < 0.0).count();
    let keep_positive = positive >= negative;
    candidates
        .iter()
        .zip(signs)
        .filter(|(_, s)| *s == 0.0 || (*s > 0.0) == keep_positive)
        .map(|(&i, _)| i)
        .collect()
}
