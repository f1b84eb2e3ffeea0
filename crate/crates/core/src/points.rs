//! Input data: 2D points (`k = 2`) or two-view correspondences (`k = 4`,
//! stored as `x1 y1 x2 y2`).

use crate::error::{Error, Result};

/// An ordered, non-empty set of equally sized data points, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    /// Diagonal of the first image in pixels, when known.
    pub image1_diag: Option<f64>,
    /// Diagonal of the second image in pixels, when known.
    pub image2_diag: Option<f64>,
    gt_inlier_mask: Option<Vec<bool>>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be positive".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidInput("point set is empty".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in point {}",
                i / dim
            )));
        }
        Ok(Self {
            dim,
            coords,
            image1_diag: None,
            image2_diag: None,
            gt_inlier_mask: None,
        })
    }

    pub fn from_points<const K: usize>(points: &[[f64; K]]) -> Result<Self> {
        Self::new(K, points.iter().flatten().copied().collect())
    }

    pub fn with_gt_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.len() {
            return Err(Error::LabelMismatch {
                labels: mask.len(),
                points: self.len(),
            });
        }
        self.gt_inlier_mask = Some(mask);
        Ok(self)
    }

    pub fn with_image_diagonals(mut self, first: Option<f64>, second: Option<f64>) -> Self {
        self.image1_diag = first;
        self.image2_diag = second;
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + Clone + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn gt_inlier_mask(&self) -> Option<&[bool]> {
        self.gt_inlier_mask.as_deref()
    }

    pub fn gt_inlier_indices(&self) -> Option<Vec<usize>> {
        self.gt_inlier_mask.as_ref().map(|m| {
            m.iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect()
        })
    }

    /// A new set made of the selected points, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
            image1_diag: self.image1_diag,
            image2_diag: self.image2_diag,
            gt_inlier_mask: self
                .gt_inlier_mask
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i]).collect()),
        }
    }

    /// Diagonal of the axis-aligned bounding box of coordinates
    /// `offset, offset + 1` over all points.
    pub fn bbox_diagonal(&self, offset: usize) -> f64 {
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in self.iter() {
            let (x, y) = (p[offset], p[offset + 1]);
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        (xmax - xmin).hypot(ymax - ymin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(PointSet::new(2, vec![]).is_err());
        assert!(PointSet::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointSet::new(2, vec![1.0, f64::NAN]).is_err());
        let ps = PointSet::new(2, vec![0.0; 6]).unwrap();
        assert!(matches!(
            ps.with_gt_mask(vec![true; 2]),
            Err(Error::LabelMismatch { labels: 2, points: 3 })
        ));
    }

    #[test]
    fn subset_keeps_labels() {
        let ps = PointSet::from_points(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
            .unwrap()
            .with_gt_mask(vec![true, false, true])
            .unwrap();
        let sub = ps.subset(&[2, 1]);
        assert_eq!(sub.point(0), &[2.0, 2.0]);
        assert_eq!(sub.gt_inlier_mask(), Some(&[true, false][..]));
        assert_eq!(ps.gt_inlier_indices(), Some(vec![0, 2]));
        assert!((ps.bbox_diagonal(0) - 8f64.sqrt()).abs() < 1e-12);
    }
}
