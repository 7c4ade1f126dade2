//! Covariance kernels.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::Matrix;
use crate::math;
use crate::points::{sq_dist, PointSet};

/// Stationary covariance function with positive amplitude and length scale.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "type", rename_all = "snake_case")
)]
pub enum KernelSpec {
    /// `k(x, x') = amplitude * exp(-||x - x'||^2 / length_scale)`.
    ///
    /// Note the squared distance is divided by `length_scale` itself, not by
    /// `2 * length_scale^2`.
    Gaussian {
        /// Prior variance `k(x, x)`.
        amplitude: f64,
        /// Divisor applied to the squared distance.
        length_scale: f64,
    },
    /// Matern kernel with smoothness 3/2:
    /// `k(x, x') = amplitude * (1 + sqrt(3) d / length_scale) * exp(-sqrt(3) d / length_scale)`
    /// with `d = ||x - x'||`.
    Matern32 {
        /// Prior variance `k(x, x)`.
        amplitude: f64,
        /// Divisor applied to the Euclidean distance.
        length_scale: f64,
    },
}

impl KernelSpec {
    /// Validated Gaussian kernel.
    pub fn gaussian(amplitude: f64, length_scale: f64) -> Result<Self, Error> {
        let k = KernelSpec::Gaussian { amplitude, length_scale };
        k.validate()?;
        Ok(k)
    }

    /// Validated Matern-3/2 kernel.
    pub fn matern32(amplitude: f64, length_scale: f64) -> Result<Self, Error> {
        let k = KernelSpec::Matern32 { amplitude, length_scale };
        k.validate()?;
        Ok(k)
    }

    /// Checks that both parameters are finite and strictly positive.
    pub fn validate(&self) -> Result<(), Error> {
        let (amplitude, length_scale) = self.params();
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel amplitude must be finite and > 0, got {amplitude}"
            )));
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel length scale must be finite and > 0, got {length_scale}"
            )));
        }
        Ok(())
    }

    fn params(&self) -> (f64, f64) {
        match *self {
            KernelSpec::Gaussian { amplitude, length_scale }
            | KernelSpec::Matern32 { amplitude, length_scale } => (amplitude, length_scale),
        }
    }

    /// Prior variance `k(x, x)`.
    pub fn amplitude(&self) -> f64 {
        self.params().0
    }

    /// Evaluates the kernel after checking parameters and dimensions.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, Error> {
        self.validate()?;
        if x.len() != y.len() {
            return Err(Error::DimMismatch { expected: x.len(), got: y.len() });
        }
        Ok(self.eval_raw(x, y))
    }

    pub(crate) fn eval_raw(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Gaussian { amplitude, length_scale } => {
                amplitude * math::exp(-sq_dist(x, y) / length_scale)
            }
            KernelSpec::Matern32 { amplitude, length_scale } => {
                let s = math::sqrt(3.0 * sq_dist(x, y)) / length_scale;
                amplitude * (1.0 + s) * math::exp(-s)
            }
        }
    }

    /// Kernel values of one point against a whole set.
    pub fn row(&self, pts: &PointSet, x: &[f64]) -> Result<Vec<f64>, Error> {
        self.validate()?;
        if x.len() != pts.dim() {
            return Err(Error::DimMismatch { expected: pts.dim(), got: x.len() });
        }
        Ok(pts.iter().map(|p| self.eval_raw(x, p)).collect())
    }

    /// Full Gram matrix of a point set.
    pub fn gram(&self, pts: &PointSet) -> Result<Matrix, Error> {
        self.validate()?;
        let n = pts.len();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_raw(pts.point(i), pts.point(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}
