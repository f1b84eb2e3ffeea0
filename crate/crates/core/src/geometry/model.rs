use nalgebra::{DMatrix, Dyn, Matrix3, Vector3, SVD};

use crate::error::{Error, Result};

/// Tolerance used when checking the normalization invariants of a model.
pub const MODEL_INVARIANT_TOL: f64 = 1e-9;

/// Relative smallest singular value below which a matrix counts as rank 2 as given.
pub const RANK_DEFICIENCY_TOL: f64 = 1e-13;

/// 2D line `a·x + b·y + c = 0` with `a² + b² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2D {
    a: f64,
    b: f64,
    c: f64,
}

impl Line2D {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let norm = a.hypot(b);
        if !(norm > 1e-300) || !c.is_finite() {
            return Err(Error::NumericalFailure("line normal vanishes"));
        }
        Ok(Self {
            a: a / norm,
            b: b / norm,
            c: c / norm,
        })
    }

    #[inline]
    pub fn coefficients(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    /// Perpendicular distance of `(x, y)` to the line.
    #[inline]
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        (self.a * x + self.b * y + self.c).abs()
    }
}

/// Planar homography, Frobenius norm 1, largest-magnitude entry positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        Ok(Self(normalize_scale_and_sign(m)?))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Maps `(x, y)` from the first image; `None` when the point goes to infinity.
    #[inline]
    pub fn transfer(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let h = &self.0;
        let w = h[(2, 0)] * x + h[(2, 1)] * y + h[(2, 2)];
        if w.abs() <= 1e-12 {
            return None;
        }
        Some((
            (h[(0, 0)] * x + h[(0, 1)] * y + h[(0, 2)]) / w,
            (h[(1, 0)] * x + h[(1, 1)] * y + h[(1, 2)]) / w,
        ))
    }
}

/// Fundamental matrix, Frobenius norm 1, rank exactly 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(Matrix3<f64>);

impl FundamentalMatrix {
    /// Normalizes `m` and projects it onto the rank-2 manifold by zeroing its
    /// smallest singular value, unless that value is already negligible.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let m = normalize_scale_and_sign(m)?;
        let svd = bidiagonal_svd(&m, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::NumericalFailure("SVD did not converge")),
        };
        let mut s = svd.singular_values;
        let imin = s.imin();
        if s[imin] <= RANK_DEFICIENCY_TOL * s.max() {
            return Ok(Self(m));
        }
        s[imin] = 0.0;
        let rank2 = Matrix3::from_iterator((u * DMatrix::from_diagonal(&s) * v_t).iter().copied());
        Ok(Self(normalize_scale_and_sign(rank2)?))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Right epipole: the unit null vector of `F` (epipole in the first image).
    pub fn right_epipole(&self) -> Vector3<f64> {
        null_vector(&self.0)
    }

    /// Left epipole: the unit null vector of `Fᵀ` (epipole in the second image).
    pub fn left_epipole(&self) -> Vector3<f64> {
        null_vector(&self.0.transpose())
    }
}

/// Full-precision SVD through Golub–Kahan bidiagonalization.
fn bidiagonal_svd(m: &Matrix3<f64>, compute_u: bool) -> SVD<f64, Dyn, Dyn> {
    DMatrix::from_column_slice(3, 3, m.as_slice()).svd(compute_u, true)
}

fn null_vector(m: &Matrix3<f64>) -> Vector3<f64> {
    let svd = bidiagonal_svd(m, false);
    let v_t = svd.v_t.expect("v_t requested");
    let imin = svd.singular_values.imin();
    Vector3::new(v_t[(imin, 0)], v_t[(imin, 1)], v_t[(imin, 2)])
}

/// Column-major index of the entry with largest magnitude (first on ties).
pub(crate) fn argmax_abs(m: &Matrix3<f64>) -> usize {
    let mut best = 0;
    for (i, v) in m.iter().enumerate() {
        if v.abs() > m[best].abs() {
            best = i;
        }
    }
    best
}

fn normalize_scale_and_sign(m: Matrix3<f64>) -> Result<Matrix3<f64>> {
    let norm = m.norm();
    if !(norm > 1e-300) || !norm.is_finite() {
        return Err(Error::NumericalFailure("model matrix vanishes"));
    }
    let mut m = m / norm;
    let imax = argmax_abs(&m);
    if m[imax] < 0.0 {
        m = -m;
    }
    Ok(m)
}

/// A fitted model for one of the supported problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Line2D(Line2D),
    Homography(Homography),
    Fundamental(FundamentalMatrix),
}

impl Model {
    /// Checks the normalization invariants of the model.
    pub fn satisfies_invariants(&self) -> bool {
        match self {
            Model::Line2D(l) => {
                let (a, b, c) = l.coefficients();
                c.is_finite() && ((a * a + b * b) - 1.0).abs() < MODEL_INVARIANT_TOL
            }
            Model::Homography(h) => {
                let m = h.matrix();
                m.iter().all(|v| v.is_finite())
                    && (m.norm() - 1.0).abs() < MODEL_INVARIANT_TOL
                    && m[argmax_abs(m)] > 0.0
            }
            Model::Fundamental(f) => {
                let m = f.matrix();
                if !m.iter().all(|v| v.is_finite()) || (m.norm() - 1.0).abs() >= MODEL_INVARIANT_TOL
                {
                    return false;
                }
                let s = m.singular_values();
                s.min() < MODEL_INVARIANT_TOL * s.max()
            }
        }
    }

    /// Matrix form, or `(a, b, c)` as the first row for lines.
    pub fn as_matrix(&self) -> Matrix3<f64> {
        match self {
            Model::Line2D(l) => {
                let (a, b, c) = l.coefficients();
                Matrix3::new(a, b, c, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
            }
            Model::Homography(h) => *h.matrix(),
            Model::Fundamental(f) => *f.matrix(),
        }
    }

    /// Distance between two models of the same kind, insensitive to the
    /// overall sign. `f64::INFINITY` for mismatched kinds.
    pub fn distance_to(&self, other: &Model) -> f64 {
        let same_kind = std::mem::discriminant(self) == std::mem::discriminant(other);
        if !same_kind {
            return f64::INFINITY;
        }
        let (a, b) = (self.as_matrix(), other.as_matrix());
        (a - b).norm().min((a + b).norm())
    }
}

impl From<Line2D> for Model {
    fn from(l: Line2D) -> Self {
        Model::Line2D(l)
    }
}

impl From<Homography> for Model {
    fn from(h: Homography) -> Self {
        Model::Homography(h)
    }
}

impl From<FundamentalMatrix> for Model {
    fn from(f: FundamentalMatrix) -> Self {
        Model::Fundamental(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homography_normalization() {
        let h = Homography::from_matrix(Matrix3::new(
            -2.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, -2.0,
        ))
        .unwrap();
        assert!((h.matrix().norm() - 1.0).abs() < 1e-12);
        assert!(h.matrix()[(0, 0)] > 0.0);
        assert!(Model::from(h).satisfies_invariants());
        assert!(Homography::from_matrix(Matrix3::zeros()).is_err());
    }

    #[test]
    fn fundamental_is_projected_to_rank_two() {
        let f = FundamentalMatrix::from_matrix(Matrix3::new(
            1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0,
        ))
        .unwrap();
        let s = f.matrix().singular_values();
        assert!(s.min() < 1e-12 * s.max());
        assert!((f.matrix().norm() - 1.0).abs() < 1e-12);
        assert!(Model::from(f).satisfies_invariants());
        let e = f.right_epipole();
        assert!((f.matrix() * e).norm() < 1e-12);
        let e2 = f.left_epipole();
        assert!((f.matrix().transpose() * e2).norm() < 1e-12);
    }

    #[test]
    fn model_distance_ignores_sign() {
        let a = Model::from(Line2D::new(0.0, 1.0, 0.0).unwrap());
        let b = Model::from(Line2D::new(0.0, -1.0, 0.0).unwrap());
        assert!(a.distance_to(&b) < 1e-15);
    }
}
