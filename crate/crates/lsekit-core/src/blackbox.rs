//! Benchmark targets: analytic test functions, tabulated functions, and
//! frozen Gaussian-process sample paths, plus uniform candidate grids.

use alloc::vec::Vec;

use crate::discretize::DEFAULT_GRID_CAP;
use crate::error::Error;
use crate::gp::Posterior;
use crate::kernel::KernelSpec;
use crate::points::PointSet;
use crate::rng::RngState;

/// Closed-form benchmark functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum AnalyticFn {
    /// `sin(10 x1) + cos(4 x2) - cos(3 x1 x2)` on the plane.
    Sinusoidal,
    /// Negated Himmelblau shifted up:
    /// `-(x1^2 + x2 - 11)^2 - (x1 + x2^2 - 7)^2 + 100`.
    Himmelblau,
    /// Negated sphere shifted up: `41.65518 - sum(x_i^2)`, five inputs.
    Sphere,
    /// Negated Rosenbrock shifted up:
    /// `53458.91 - sum(100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2)`, five inputs.
    Rosenbrock,
    /// Negated Styblinski-Tang shifted up:
    /// `-20.8875 - sum(x_i^4 - 16 x_i^2 + 5 x_i) / 2`, five inputs.
    StyblinskiTang,
}

impl AnalyticFn {
    /// Required input dimension.
    pub fn dim(&self) -> usize {
        match self {
            AnalyticFn::Sinusoidal | AnalyticFn::Himmelblau => 2,
            AnalyticFn::Sphere | AnalyticFn::Rosenbrock | AnalyticFn::StyblinskiTang => 5,
        }
    }

    /// Evaluates the formula.
    pub fn eval(&self, x: &[f64]) -> Result<f64, Error> {
        if x.len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(match self {
            AnalyticFn::Sinusoidal => {
                crate::math::sin(10.0 * x[0]) + crate::math::cos(4.0 * x[1])
                    - crate::math::cos(3.0 * x[0] * x[1])
            }
            AnalyticFn::Himmelblau => {
                let p = x[0] * x[0] + x[1] - 11.0;
                let q = x[0] + x[1] * x[1] - 7.0;
                -(p * p) - q * q + 100.0
            }
            AnalyticFn::Sphere => 41.65518 - x.iter().map(|v| v * v).sum::<f64>(),
            AnalyticFn::Rosenbrock => {
                let mut s = 0.0;
                for w in x.windows(2) {
                    let a = w[1] - w[0] * w[0];
                    let b = 1.0 - w[0];
                    s += 100.0 * a * a + b * b;
                }
                53458.91 - s
            }
            AnalyticFn::StyblinskiTang => {
                let s: f64 = x.iter().map(|&v| v * v * v * v - 16.0 * v * v + 5.0 * v).sum();
                -20.8875 - s / 2.0
            }
        })
    }
}

/// A function known only through values at a fixed point set.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedFn {
    xs: PointSet,
    values: Vec<f64>,
}

impl TabulatedFn {
    /// Pairs points with their function values.
    pub fn new(xs: PointSet, values: Vec<f64>) -> Result<Self, Error> {
        if xs.len() != values.len() {
            return Err(Error::LengthMismatch { left: xs.len(), right: values.len() });
        }
        if xs.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "tabulated values must be finite, got {v}"
            )));
        }
        Ok(Self { xs, values })
    }

    /// Support points.
    pub fn xs(&self) -> &PointSet {
        &self.xs
    }

    /// Values aligned with [`Self::xs`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at support point `i`.
    pub fn value_at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Looks up `x` among the support points (exact coordinate match).
    pub fn eval(&self, x: &[f64]) -> Result<f64, Error> {
        if x.len() != self.xs.dim() {
            return Err(Error::DimMismatch { expected: self.xs.dim(), got: x.len() });
        }
        for (i, p) in self.xs.iter().enumerate() {
            if p == x {
                return Ok(self.values[i]);
            }
        }
        Err(Error::InvalidParameter(
            "tabulated function queried off its support points".into(),
        ))
    }
}

/// A benchmark target. Observation noise is handled by the caller; this is
/// the noiseless `f`.
#[derive(Clone, Debug, PartialEq)]
pub enum BlackBox {
    /// A closed-form function.
    Analytic(AnalyticFn),
    /// A table of values, e.g. ingested data or a frozen sample path.
    Tabulated(TabulatedFn),
}

impl BlackBox {
    /// Draws one zero-mean prior sample path of `kernel` over `xs` and
    /// freezes it as a tabulated function. Successive calls with the same
    /// RNG state reproduce the same table bit for bit.
    pub fn gp_sample(kernel: KernelSpec, xs: &PointSet, rng: &mut RngState) -> Result<Self, Error> {
        let prior = Posterior::prior(kernel, xs.dim(), 0.0)?;
        let mut paths = prior.sample_paths(xs, 1, rng)?;
        let values = paths.pop().expect("one path requested");
        Ok(BlackBox::Tabulated(TabulatedFn::new(xs.clone(), values)?))
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        match self {
            BlackBox::Analytic(f) => f.dim(),
            BlackBox::Tabulated(t) => t.xs().dim(),
        }
    }

    /// Evaluates `f(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, Error> {
        match self {
            BlackBox::Analytic(f) => f.eval(x),
            BlackBox::Tabulated(t) => t.eval(x),
        }
    }

    /// The underlying table, when there is one.
    pub fn table(&self) -> Option<&TabulatedFn> {
        match self {
            BlackBox::Tabulated(t) => Some(t),
            BlackBox::Analytic(_) => None,
        }
    }
}

/// Uniform lattice over a box, endpoints included, `counts[i]` points per
/// axis (each at least 2). The first axis varies slowest.
pub fn make_grid(bounds: &[(f64, f64)], counts: &[usize]) -> Result<PointSet, Error> {
    if bounds.is_empty() {
        return Err(Error::InvalidParameter("grid needs at least one axis".into()));
    }
    if bounds.len() != counts.len() {
        return Err(Error::LengthMismatch { left: bounds.len(), right: counts.len() });
    }
    let mut total: u128 = 1;
    for (axis, (&(lo, hi), &n)) in bounds.iter().zip(counts).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(alloc::format!(
                "axis {axis} needs finite bounds with lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "axis {axis} needs at least 2 points, got {n}"
            )));
        }
        total = total.saturating_mul(n as u128);
    }
    if total > DEFAULT_GRID_CAP as u128 {
        return Err(Error::GridTooLarge { points: total, cap: DEFAULT_GRID_CAP as u128 });
    }
    let d = bounds.len();
    let mut coords = Vec::with_capacity(total as usize * d);
    let mut idx = alloc::vec![0usize; d];
    loop {
        for axis in 0..d {
            let (lo, hi) = bounds[axis];
            let n = counts[axis];
            let i = idx[axis];
            // land exactly on the upper endpoint
            let v = if i + 1 == n { hi } else { lo + i as f64 * (hi - lo) / (n - 1) as f64 };
            coords.push(v);
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return PointSet::new(d, coords);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}
