//! Small dense helpers shared by the solvers.

use nalgebra::{Matrix3, SMatrix, SVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number beyond which a DLT nullspace is considered ill-defined.
pub const DLT_CONDITION_LIMIT: f64 = 1e12;

/// Similarity transform moving the (weighted) centroid to the origin and
/// scaling the (weighted) mean distance to √2.
#[derive(Debug, Clone, Copy)]
pub struct Normalizer {
    pub cx: f64,
    pub cy: f64,
    pub scale: f64,
}

impl Normalizer {
    /// `points` yields `(x, y, weight)`; zero weights are ignored.
    pub fn fit(points: impl Iterator<Item = (f64, f64, f64)> + Clone) -> Result<Self> {
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for (x, y, w) in points.clone() {
            sw += w;
            sx += w * x;
            sy += w * y;
        }
        if !(sw > 0.0) {
            return Err(Error::NumericalFailure("normalization has no mass"));
        }
        let (cx, cy) = (sx / sw, sy / sw);
        let mean_dist = points
            .map(|(x, y, w)| w * ((x - cx) * (x - cx) + (y - cy) * (y - cy)).sqrt())
            .sum::<f64>()
            / sw;
        if !(mean_dist > 1e-12) {
            return Err(Error::DegenerateSample("all points coincide"));
        }
        Ok(Self {
            cx,
            cy,
            scale: std::f64::consts::SQRT_2 / mean_dist,
        })
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.cx) * self.scale, (y - self.cy) * self.scale)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let s = self.scale;
        Matrix3::new(s, 0.0, -s * self.cx, 0.0, s, -s * self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        let s = 1.0 / self.scale;
        Matrix3::new(s, 0.0, self.cx, 0.0, s, self.cy, 0.0, 0.0, 1.0)
    }
}

/// Nullspace of an `R × 9` system (`R < 9`) by Gauss–Jordan elimination with
/// complete pivoting. Returns `9 - R` unit vectors.
pub fn nullspace_rows<const R: usize>(mut a: [[f64; 9]; R]) -> Result<Vec<SVector<f64, 9>>> {
    let mut cols: [usize; 9] = std::array::from_fn(|i| i);
    let mut first_pivot = 0.0;
    for k in 0..R {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for (r, row) in a.iter().enumerate().skip(k) {
            for (c, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        if k == 0 {
            first_pivot = best;
        }
        if !(best > 0.0) || first_pivot / best > DLT_CONDITION_LIMIT {
            return Err(Error::NumericalFailure("DLT system is rank deficient"));
        }
        a.swap(k, pr);
        if pc != k {
            for row in a.iter_mut() {
                row.swap(k, pc);
            }
            cols.swap(k, pc);
        }
        let inv = 1.0 / a[k][k];
        for v in a[k].iter_mut() {
            *v *= inv;
        }
        let pivot_row = a[k];
        for (r, row) in a.iter_mut().enumerate() {
            if r == k {
                continue;
            }
            let f = row[k];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
    }
    // Reduced form is [I | B]; kernel basis columns are (-B e_j, e_j).
    let mut out = Vec::with_capacity(9 - R);
    for free in R..9 {
        let mut v = SVector::<f64, 9>::zeros();
        v[cols[free]] = 1.0;
        for (k, row) in a.iter().enumerate() {
            v[cols[k]] = -row[free];
        }
        out.push(v.normalize());
    }
    Ok(out)
}

/// Unit eigenvector for the smallest eigenvalue of a symmetric PSD 9×9
/// matrix, rejecting nullspaces of dimension > 1.
pub fn smallest_eigenvector(m: SMatrix<f64, 9, 9>) -> Result<SVector<f64, 9>> {
    let eig = SymmetricEigen::new(m);
    let mut order: [usize; 9] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lmax = eig.eigenvalues[order[8]];
    let l2 = eig.eigenvalues[order[1]];
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(Error::NumericalFailure("empty normal equations"));
    }
    // Eigenvalues are squared singular values of the design matrix.
    if l2 <= lmax / (DLT_CONDITION_LIMIT * DLT_CONDITION_LIMIT) {
        return Err(Error::NumericalFailure("nullspace is not one-dimensional"));
    }
    Ok(eig.eigenvectors.column(order[0]).into_owned())
}

/// Real roots of `c[3]·x³ + c[2]·x² + c[1]·x + c[0]`. Complex roots whose
/// imaginary part is within `1e-9` are returned as real.
pub fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let [c0, c1, c2, c3] = c.map(|v| v / scale);
    let mut roots = Vec::with_capacity(3);
    if c3.abs() < 1e-12 {
        if c2.abs() < 1e-12 {
            if c1.abs() > 1e-12 {
                roots.push(-c0 / c1);
            }
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -0.5 * (c1 + c1.signum() * sq);
                roots.push(q / c2);
                if q != 0.0 {
                    roots.push(c0 / q);
                }
            }
        }
    } else {
        let (a, b, cc) = (c2 / c3, c1 / c3, c0 / c3);
        // x = t - a/3 ; t³ + p t + q = 0
        let p = b - a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + cc;
        let shift = -a / 3.0;
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc < 0.0 {
            let r = (-p / 3.0).sqrt();
            let phi = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0).acos();
            for k in 0..3 {
                let t = 2.0 * r * ((phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
                roots.push(t + shift);
            }
        } else {
            let sq = disc.sqrt();
            let u = (-q / 2.0 + sq).cbrt();
            let v = (-q / 2.0 - sq).cbrt();
            roots.push(u + v + shift);
            let imag = (3f64.sqrt() / 2.0 * (u - v)).abs();
            if imag <= 1e-9 {
                roots.push(-(u + v) / 2.0 + shift);
            }
        }
    }
    let eval = |x: f64| ((c3 * x + c2) * x + c1) * x + c0;
    let deriv = |x: f64| (3.0 * c3 * x + 2.0 * c2) * x + c1;
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = deriv(*r);
            if d.abs() < 1e-300 {
                break;
            }
            let step = eval(*r) / d;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_three_real_roots() {
        // (x-1)(x-2)(x+3) = x³ - 7x + 6
        let mut r = real_cubic_roots([6.0, -7.0, 0.0, 1.0]);
        r.sort_by(f64::total_cmp);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn cubic_single_real_root() {
        // (x-2)(x²+1)
        let r = real_cubic_roots([-2.0, 1.0, -2.0, 1.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_double_root_is_kept() {
        // (x-1)²(x+2) = x³ - 3x + 2
        let r = real_cubic_roots([2.0, -3.0, 0.0, 1.0]);
        assert!(r.iter().any(|x| (x - 1.0).abs() < 1e-6));
        assert!(r.iter().any(|x| (x + 2.0).abs() < 1e-12));
    }

    #[test]
    fn cubic_degenerates_to_quadratic() {
        let mut r = real_cubic_roots([-1.0, 0.0, 1.0, 0.0]);
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![-1.0, 1.0]);
    }

    #[test]
    fn nullspace_of_rank_deficient_system() {
        let mut rows = [[0.0; 9]; 8];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
            row[8] = -(i as f64 + 1.0);
        }
        let ns = nullspace_rows(rows).unwrap();
        assert_eq!(ns.len(), 1);
        for row in rows.iter() {
            let dot: f64 = row.iter().zip(ns[0].iter()).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-14);
        }
        let mut bad = rows;
        bad[7] = bad[6];
        assert!(nullspace_rows(bad).is_err());
    }

    #[test]
    fn weighted_normalizer_ignores_zero_weights() {
        let pts = [(0.0, 0.0, 1.0), (2.0, 0.0, 1.0), (100.0, 100.0, 0.0)];
        let n = Normalizer::fit(pts.iter().copied()).unwrap();
        assert_eq!((n.cx, n.cy), (1.0, 0.0));
        assert!((n.scale - std::f64::consts::SQRT_2).abs() < 1e-15);
        let prod = n.matrix() * n.inverse_matrix();
        assert!((prod - Matrix3::identity()).norm() < 1e-15);
    }
}
