//! Flat storage for collections of points in `R^d`.

use alloc::vec::Vec;

use crate::error::Error;

/// A set of points sharing one dimension, stored row-major in a single
/// buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Wraps a flat coordinate buffer. The length must be a multiple of
    /// `dim`.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self, Error> {
        if dim == 0 {
            return Err(Error::InvalidParameter("point dimension must be >= 1".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::LengthMismatch {
                left: coords.len(),
                right: dim,
            });
        }
        Ok(Self { dim, coords })
    }

    /// An empty set of `dim`-dimensional points.
    ///
    /// Panics if `dim` is zero.
    pub fn empty(dim: usize) -> Self {
        assert!(dim >= 1, "point dimension must be >= 1");
        Self { dim, coords: Vec::new() }
    }

    /// Builds a set from per-point rows, which must all share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, Error> {
        let dim = rows.first().map_or(1, Vec::len);
        let mut set = Self::empty(dim.max(1));
        for row in rows {
            set.push(row)?;
        }
        Ok(set)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// True when the set holds no points.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Shared dimension of all points.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterates over the points in storage order.
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Appends one point.
    pub fn push(&mut self, x: &[f64]) -> Result<(), Error> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: x.len() });
        }
        self.coords.extend_from_slice(x);
        Ok(())
    }

    /// The underlying flat buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        let d = ai - bi;
        acc += d * d;
    }
    acc
}

/// L1 (taxicab) distance.
pub fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        acc += crate::math::abs(ai - bi);
    }
    acc
}
