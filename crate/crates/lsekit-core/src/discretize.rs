//! Cell-center discretization of box domains `[0, r]^d`.
//!
//! The grid at iteration `t` splits each axis into `tau_t` equal cells and
//! keeps the cell centers, where
//!
//! ```text
//! tau_t = ceil(b * d * r * t^2 * (sqrt(ln(a d)) + sqrt(pi) / 2))
//! ```
//!
//! for derivative tail-bound constants `a, b`. Every `x` in the box then has
//! a grid point within L1 distance `d * r / tau_t`. Since `tau_t` grows like
//! `t^2`, materializing the grid is only feasible desk-scale; the schedule
//! itself stays cheap at any `t`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::points::PointSet;

/// Default cap on the number of grid points ever materialized.
pub const DEFAULT_GRID_CAP: usize = 10_000_000;

/// Box domain `[0, r]^d` with smoothness constants `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Tail-bound constant `a` (needs `a * d >= 1`).
    pub a: f64,
    /// Tail-bound constant `b`.
    pub b: f64,
    /// Edge length of the box.
    pub r: f64,
    /// Dimension of the box.
    pub d: usize,
}

impl GridSpec {
    /// Validates `a, b, r > 0` and `d >= 1`.
    pub fn new(a: f64, b: f64, r: f64, d: usize) -> Result<Self, Error> {
        for (name, v) in [("a", a), ("b", b), ("r", r)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "grid parameter {name} must be finite and > 0, got {v}"
                )));
            }
        }
        if d == 0 {
            return Err(Error::InvalidParameter("grid dimension must be >= 1".into()));
        }
        Ok(Self { a, b, r, d })
    }
}

/// Cells per axis at iteration `t`.
///
/// Errors when `t = 0`, when `a * d < 1` (the tail bound's log would be
/// negative), or when the value overflows.
pub fn tau_t(spec: &GridSpec, t: u64) -> Result<u64, Error> {
    if t == 0 {
        return Err(Error::InvalidParameter("discretization needs t >= 1".into()));
    }
    let ad = spec.a * spec.d as f64;
    if ad < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "schedule needs a * d >= 1 so ln(a d) is nonnegative, got {ad}"
        )));
    }
    let t = t as f64;
    let raw = spec.b
        * spec.d as f64
        * spec.r
        * t
        * t
        * (math::sqrt(math::ln(ad)) + math::sqrt(core::f64::consts::PI) / 2.0);
    if !raw.is_finite() || raw >= 9.2e18 {
        return Err(Error::InvalidParameter(format!("tau overflows: {raw}")));
    }
    Ok(math::ceil(raw) as u64)
}

/// Discretization of a box at a fixed iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscretizationState {
    /// Domain and schedule constants.
    pub spec: GridSpec,
    /// Iteration the grid belongs to.
    pub t: u64,
    /// Cells per axis.
    pub tau: u64,
}

impl DiscretizationState {
    /// Computes the schedule for iteration `t`.
    pub fn new(spec: GridSpec, t: u64) -> Result<Self, Error> {
        let tau = tau_t(&spec, t)?;
        Ok(Self { spec, t, tau })
    }

    /// Total number of grid points `tau^d`, saturating at `u128::MAX`.
    pub fn cell_count(&self) -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..self.spec.d {
            acc = acc.saturating_mul(self.tau as u128);
        }
        acc
    }

    fn center(&self, j: u64) -> f64 {
        (2.0 * j as f64 + 1.0) * self.spec.r / (2.0 * self.tau as f64)
    }

    /// Materializes the full grid in lexicographic order (first axis
    /// slowest), guarded by a point-count cap.
    pub fn grid(&self, cap: usize) -> Result<PointSet, Error> {
        let count = self.cell_count();
        if count > cap as u128 {
            return Err(Error::GridTooLarge { points: count, cap: cap as u128 });
        }
        let d = self.spec.d;
        let n = count as usize;
        let mut coords = Vec::with_capacity(n * d);
        let mut odometer = alloc::vec![0u64; d];
        for _ in 0..n {
            for &j in odometer.iter() {
                coords.push(self.center(j));
            }
            for axis in (0..d).rev() {
                odometer[axis] += 1;
                if odometer[axis] < self.tau {
                    break;
                }
                odometer[axis] = 0;
            }
        }
        PointSet::new(d, coords)
    }

    /// Nearest grid point to `x` in L1 distance. Ties are resolved toward
    /// the smaller coordinate on each axis, which yields the
    /// lexicographically smallest minimizer.
    pub fn nearest(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        if x.len() != self.spec.d {
            return Err(Error::DimMismatch { expected: self.spec.d, got: x.len() });
        }
        let mut out = Vec::with_capacity(x.len());
        for (axis, &xi) in x.iter().enumerate() {
            if !(0.0 <= xi && xi <= self.spec.r) {
                return Err(Error::OutOfDomain { axis, value: xi });
            }
            let raw = math::floor(xi * self.tau as f64 / self.spec.r) as i64;
            let hi = (self.tau - 1) as i64;
            let j0 = raw.clamp(0, hi);
            let mut best = j0;
            let mut best_dist = math::abs(xi - self.center(j0 as u64));
            for cand in [j0 - 1, j0 + 1] {
                if (0..=hi).contains(&cand) {
                    let dist = math::abs(xi - self.center(cand as u64));
                    if dist < best_dist || (dist == best_dist && cand < best) {
                        best = cand;
                        best_dist = dist;
                    }
                }
            }
            out.push(self.center(best as u64));
        }
        Ok(out)
    }
}

/// Convenience wrapper over [`DiscretizationState::grid`].
pub fn build_grid(spec: &GridSpec, t: u64, cap: usize) -> Result<PointSet, Error> {
    DiscretizationState::new(*spec, t)?.grid(cap)
}

/// Convenience wrapper over [`DiscretizationState::nearest`].
pub fn nearest_in_grid(spec: &GridSpec, t: u64, x: &[f64]) -> Result<Vec<f64>, Error> {
    DiscretizationState::new(*spec, t)?.nearest(x)
}
