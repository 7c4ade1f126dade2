//! Exact Gaussian process regression via Cholesky factorization.
//!
//! With data `D = {(x_i, y_i)}` and noise variance `s`, the posterior at `x`
//! is
//!
//! ```text
//! mean(x) = k(x)^T (K + s I)^{-1} y
//! var(x)  = k(x, x) - k(x)^T (K + s I)^{-1} k(x)
//! ```
//!
//! With no data the posterior is the prior: mean 0 and variance `k(x, x)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::kernel::KernelSpec;
use crate::linalg::{dot, Cholesky, Matrix};
use crate::points::PointSet;
use crate::rng::RngState;

/// First jitter tried when the Gram matrix needs stabilizing, as a fraction
/// of the kernel amplitude.
pub const JITTER_INITIAL_SCALE: f64 = 1e-10;
/// Largest jitter tried before giving up, as a fraction of the amplitude.
pub const JITTER_MAX_SCALE: f64 = 1e-6;
const JITTER_GROWTH: f64 = 10.0;

/// Observed inputs and outputs together with the observation noise variance.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: PointSet,
    outputs: Vec<f64>,
    noise_variance: f64,
}

impl Dataset {
    /// Pairs inputs with outputs. Lengths must match and the noise variance
    /// must be finite and nonnegative.
    pub fn new(inputs: PointSet, outputs: Vec<f64>, noise_variance: f64) -> Result<Self, Error> {
        if inputs.len() != outputs.len() {
            return Err(Error::LengthMismatch { left: inputs.len(), right: outputs.len() });
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "noise variance must be finite and >= 0, got {noise_variance}"
            )));
        }
        Ok(Self { inputs, outputs, noise_variance })
    }

    /// Dataset with no observations yet.
    pub fn empty(dim: usize, noise_variance: f64) -> Result<Self, Error> {
        Self::new(PointSet::empty(dim), Vec::new(), noise_variance)
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    /// True when no observations are present.
    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Observed inputs.
    pub fn inputs(&self) -> &PointSet {
        &self.inputs
    }

    /// Observed outputs.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Observation noise variance.
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Appends one observation.
    pub fn push(&mut self, x: &[f64], y: f64) -> Result<(), Error> {
        self.inputs.push(x)?;
        self.outputs.push(y);
        Ok(())
    }
}

/// GP posterior over a dataset, ready for mean/variance queries.
#[derive(Clone, Debug)]
pub struct Posterior {
    kernel: KernelSpec,
    data: Dataset,
    chol: Cholesky,
    scaled_obs: Vec<f64>,
    weights: Vec<f64>,
    jitter: f64,
}

impl Posterior {
    /// Fits the posterior by a full Cholesky factorization of
    /// `K + (noise + jitter) I`.
    ///
    /// When the noise variance is positive no jitter is tried first; when it
    /// is zero, or whenever factorization fails, the jitter ladder
    /// `amplitude * 1e-10, 1e-9, ..., 1e-6` is walked until the factorization
    /// succeeds.
    pub fn fit(kernel: KernelSpec, data: Dataset) -> Result<Self, Error> {
        kernel.validate()?;
        let mut jitter = if data.noise_variance() > 0.0 {
            0.0
        } else {
            JITTER_INITIAL_SCALE * kernel.amplitude()
        };
        loop {
            if let Some(chol) = Self::try_factor(&kernel, &data, jitter) {
                let scaled_obs = chol.solve_lower(data.outputs());
                let weights = chol.solve_lower_transpose(&scaled_obs);
                return Ok(Self { kernel, data, chol, scaled_obs, weights, jitter });
            }
            jitter = next_jitter(jitter, kernel.amplitude());
            if jitter > JITTER_MAX_SCALE * kernel.amplitude() {
                return Err(Error::IllConditioned {
                    jitter_limit: JITTER_MAX_SCALE * kernel.amplitude(),
                });
            }
        }
    }

    fn try_factor(kernel: &KernelSpec, data: &Dataset, jitter: f64) -> Option<Cholesky> {
        let mut chol = Cholesky::empty();
        let diag_add = data.noise_variance() + jitter;
        for i in 0..data.len() {
            let xi = data.inputs().point(i);
            let row: Vec<f64> =
                (0..i).map(|j| kernel.eval_raw(xi, data.inputs().point(j))).collect();
            let diag = kernel.eval_raw(xi, xi) + diag_add;
            if chol.append_row(&row, diag).is_err() {
                return None;
            }
        }
        Some(chol)
    }

    /// The prior: a posterior with no observations.
    pub fn prior(kernel: KernelSpec, dim: usize, noise_variance: f64) -> Result<Self, Error> {
        Self::fit(kernel, Dataset::empty(dim, noise_variance)?)
    }

    /// Returns a new posterior extended by one observation.
    ///
    /// The factor is grown in place with the jitter already in use, which
    /// gives bit-identical results to a full refit at the same jitter. If the
    /// grown factorization fails, a full refit with the jitter ladder is run
    /// instead.
    pub fn with_observation(&self, x: &[f64], y: f64) -> Result<Self, Error> {
        let mut next = self.clone();
        next.data.push(x, y)?;
        let row = self.kernel.row(self.data.inputs(), x)?;
        let diag = self.kernel.eval_raw(x, x) + self.data.noise_variance() + self.jitter;
        if next.chol.append_row(&row, diag).is_err() {
            return Self::fit(self.kernel, next.data);
        }
        let t = self.scaled_obs.len();
        let l_row = next.chol.row(t);
        let acc = dot(&l_row[..t], &next.scaled_obs);
        next.scaled_obs.push((y - acc) / l_row[t]);
        next.weights = next.chol.solve_lower_transpose(&next.scaled_obs);
        Ok(next)
    }

    /// Number of observations.
    pub fn t(&self) -> usize {
        self.data.len()
    }

    /// Kernel in use.
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Underlying dataset.
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Diagonal jitter that was required, 0.0 if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub(crate) fn chol(&self) -> &Cholesky {
        &self.chol
    }

    pub(crate) fn scaled_obs(&self) -> &[f64] {
        &self.scaled_obs
    }

    /// Posterior mean and variance at one point. Variance is clamped to be
    /// nonnegative.
    pub fn mean_var(&self, x: &[f64]) -> Result<(f64, f64), Error> {
        let prior = self.kernel.eval(x, x)?;
        if self.data.is_empty() {
            return Ok((0.0, prior));
        }
        if x.len() != self.data.inputs().dim() {
            return Err(Error::DimMismatch { expected: self.data.inputs().dim(), got: x.len() });
        }
        let k_row = self.kernel.row(self.data.inputs(), x)?;
        let v = self.chol.solve_lower(&k_row);
        let mean = dot(&k_row, &self.weights);
        let var = (prior - dot(&v, &v)).max(0.0);
        Ok((mean, var))
    }

    /// Means and variances over a point set; identical to calling
    /// [`Posterior::mean_var`] point by point.
    pub fn mean_var_batch(&self, xs: &PointSet) -> Result<(Vec<f64>, Vec<f64>), Error> {
        let mut means = Vec::with_capacity(xs.len());
        let mut vars = Vec::with_capacity(xs.len());
        for x in xs.iter() {
            let (m, v) = self.mean_var(x)?;
            means.push(m);
            vars.push(v);
        }
        Ok((means, vars))
    }

    /// Posterior covariance matrix over a point set. Diagonal entries are
    /// clamped to be nonnegative.
    pub fn cov(&self, xs: &PointSet) -> Result<Matrix, Error> {
        let n = xs.len();
        let mut cov = self.kernel.gram(xs)?;
        if !self.data.is_empty() {
            if xs.dim() != self.data.inputs().dim() {
                return Err(Error::DimMismatch {
                    expected: self.data.inputs().dim(),
                    got: xs.dim(),
                });
            }
            let vs: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| {
                    let k_row = self.kernel.row(self.data.inputs(), x)?;
                    Ok(self.chol.solve_lower(&k_row))
                })
                .collect::<Result<_, Error>>()?;
            for i in 0..n {
                for j in 0..=i {
                    let v = cov[(i, j)] - dot(&vs[i], &vs[j]);
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
        }
        for i in 0..n {
            if cov[(i, i)] < 0.0 {
                cov[(i, i)] = 0.0;
            }
        }
        Ok(cov)
    }

    /// Draws `n_paths` joint samples of the posterior at `xs`.
    ///
    /// The covariance is factored with a diagonal nugget walked up the same
    /// ladder as the fit jitter; posterior covariances over dense sets are
    /// almost always rank deficient, so some nugget is expected.
    pub fn sample_paths(
        &self,
        xs: &PointSet,
        n_paths: usize,
        rng: &mut RngState,
    ) -> Result<Vec<Vec<f64>>, Error> {
        let (means, _) = self.mean_var_batch(xs)?;
        let cov = self.cov(xs)?;
        let n = xs.len();
        let amplitude = self.kernel.amplitude();
        let mut nugget = JITTER_INITIAL_SCALE * amplitude;
        let chol = loop {
            let mut attempt = Cholesky::empty();
            let mut ok = true;
            for i in 0..n {
                if attempt.append_row(&cov.row(i)[..i], cov[(i, i)] + nugget).is_err() {
                    ok = false;
                    break;
                }
            }
            if ok {
                break attempt;
            }
            nugget = next_jitter(nugget, amplitude);
            if nugget > JITTER_MAX_SCALE * amplitude {
                return Err(Error::IllConditioned { jitter_limit: JITTER_MAX_SCALE * amplitude });
            }
        };
        let mut paths = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let z: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            let mut path = Vec::with_capacity(n);
            for i in 0..n {
                path.push(means[i] + dot(chol.row(i), &z[..i + 1]));
            }
            paths.push(path);
        }
        Ok(paths)
    }
}

fn next_jitter(jitter: f64, amplitude: f64) -> f64 {
    if jitter == 0.0 {
        JITTER_INITIAL_SCALE * amplitude
    } else {
        jitter * JITTER_GROWTH
    }
}

/// Posterior moments over a fixed query set, maintained incrementally.
///
/// Rebuilding the cache from a refit posterior and growing it one
/// observation at a time run the same update arithmetic, and both agree with
/// [`Posterior::mean_var`] to far better than the documented 1e-8.
/// The optional covariance matrix (needed by the MILE acquisition rule) is
/// kept current with rank-1 downdates.
#[derive(Clone, Debug)]
pub struct QueryCache {
    xs: PointSet,
    v: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
    cov: Option<Matrix>,
    t: usize,
}

impl QueryCache {
    /// Builds the cache for `xs` by replaying every observation of `post`.
    /// Set `with_cov` to additionally maintain the full covariance matrix
    /// (quadratic memory in `xs.len()`).
    pub fn new(post: &Posterior, xs: PointSet, with_cov: bool) -> Result<Self, Error> {
        let kernel = *post.kernel();
        kernel.validate()?;
        if !post.data().is_empty() && xs.dim() != post.data().inputs().dim() {
            return Err(Error::DimMismatch {
                expected: post.data().inputs().dim(),
                got: xs.dim(),
            });
        }
        let n = xs.len();
        let vars: Vec<f64> = xs.iter().map(|x| kernel.eval_raw(x, x)).collect();
        let cov = if with_cov { Some(kernel.gram(&xs)?) } else { None };
        let mut cache =
            Self { xs, v: Vec::new(), means: vec![0.0; n], vars, cov, t: 0 };
        for i in 0..post.t() {
            cache.append_step(post, i)?;
        }
        Ok(cache)
    }

    /// Absorbs the newest observation of `post`, which must hold exactly one
    /// observation more than the cache has seen.
    pub fn append(&mut self, post: &Posterior) -> Result<(), Error> {
        if post.t() != self.t + 1 {
            return Err(Error::LengthMismatch { left: post.t(), right: self.t + 1 });
        }
        self.append_step(post, self.t)
    }

    fn append_step(&mut self, post: &Posterior, obs: usize) -> Result<(), Error> {
        let n = self.xs.len();
        let x_obs = post.data().inputs().point(obs);
        let k_new = post.kernel().row(&self.xs, x_obs)?;
        let l_row = post.chol().row(obs);
        let (l_prev, l_diag) = l_row.split_at(obs);
        let z_new = post.scaled_obs()[obs];
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            for (j, lj) in l_prev.iter().enumerate() {
                acc += lj * self.v[j * n + i];
            }
            let ui = (k_new[i] - acc) / l_diag[0];
            self.means[i] += z_new * ui;
            self.vars[i] = (self.vars[i] - ui * ui).max(0.0);
            u.push(ui);
        }
        if let Some(cov) = &mut self.cov {
            for i in 0..n {
                let ui = u[i];
                for j in 0..n {
                    cov[(i, j)] -= ui * u[j];
                }
            }
        }
        self.v.extend_from_slice(&u);
        self.t += 1;
        Ok(())
    }

    /// Query points the cache was built over.
    pub fn xs(&self) -> &PointSet {
        &self.xs
    }

    /// Observations absorbed so far.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Posterior means at the query points.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Posterior variances at the query points (clamped nonnegative).
    pub fn vars(&self) -> &[f64] {
        &self.vars
    }

    /// Maintained posterior covariance, if requested at construction.
    pub fn cov(&self) -> Option<&Matrix> {
        self.cov.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::PointSet;

    fn toy_posterior(noise: f64) -> Posterior {
        let inputs = PointSet::new(1, vec![0.0, 1.0, 2.5]).unwrap();
        let data = Dataset::new(inputs, vec![0.3, -0.2, 0.9], noise).unwrap();
        Posterior::fit(KernelSpec::gaussian(1.0, 2.0).unwrap(), data).unwrap()
    }

    #[test]
    fn empty_dataset_gives_prior() {
        let post = Posterior::prior(KernelSpec::gaussian(2.0, 1.0).unwrap(), 2, 0.1).unwrap();
        let (m, v) = post.mean_var(&[0.4, -0.4]).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(v, 2.0);
    }

    #[test]
    fn single_observation_closed_form() {
        // k(x,x) = 1, noise s: mean = y/(1+s), var = s/(1+s)
        let s = 1e-6;
        let data =
            Dataset::new(PointSet::new(1, vec![0.5]).unwrap(), vec![0.7], s).unwrap();
        let post = Posterior::fit(KernelSpec::gaussian(1.0, 2.0).unwrap(), data).unwrap();
        let (m, v) = post.mean_var(&[0.5]).unwrap();
        assert!((m - 0.6999993000007).abs() < 1e-12);
        assert!((v - 9.99999000001e-7).abs() < 1e-12);
        assert!(v <= 2e-6);
    }

    #[test]
    fn far_query_returns_prior() {
        let post = toy_posterior(1e-2);
        let (m, v) = post.mean_var(&[500.0]).unwrap();
        assert!(m.abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_noise_uses_jitter_ladder() {
        let post = toy_posterior(0.0);
        assert!(post.jitter() >= JITTER_INITIAL_SCALE);
        // interpolates the data nearly exactly
        let (m, _) = post.mean_var(&[1.0]).unwrap();
        assert!((m - -0.2).abs() < 1e-3);
    }

    #[test]
    fn duplicate_rows_with_zero_noise_still_fit() {
        let inputs = PointSet::new(1, vec![1.0, 1.0]).unwrap();
        let data = Dataset::new(inputs, vec![0.5, 0.5], 0.0).unwrap();
        let post = Posterior::fit(KernelSpec::gaussian(1.0, 2.0).unwrap(), data).unwrap();
        let (m, v) = post.mean_var(&[1.0]).unwrap();
        assert!((m - 0.5).abs() < 1e-3);
        assert!(v >= 0.0);
    }

    #[test]
    fn incremental_matches_refit() {
        let kernel = KernelSpec::matern32(2.0, 3.0).unwrap();
        let noise = 0.05;
        let xs: Vec<f64> = vec![0.0, 0.7, 1.9, 2.2, 4.0];
        let ys: Vec<f64> = vec![0.1, -0.4, 0.8, 0.2, -0.9];
        let mut grown = Posterior::prior(kernel, 1, noise).unwrap();
        for (&x, &y) in xs.iter().zip(&ys) {
            grown = grown.with_observation(&[x], y).unwrap();
        }
        let data =
            Dataset::new(PointSet::new(1, xs).unwrap(), ys, noise).unwrap();
        let refit = Posterior::fit(kernel, data).unwrap();
        for q in [-1.0, 0.3, 1.0, 2.05, 3.3, 10.0] {
            let (mg, vg) = grown.mean_var(&[q]).unwrap();
            let (mr, vr) = refit.mean_var(&[q]).unwrap();
            assert!((mg - mr).abs() < 1e-8, "mean at {q}");
            assert!((vg - vr).abs() < 1e-8, "var at {q}");
        }
    }

    #[test]
    fn batch_equals_pointwise() {
        let post = toy_posterior(0.1);
        let xs = PointSet::new(1, vec![-0.5, 0.2, 1.4, 3.0]).unwrap();
        let (means, vars) = post.mean_var_batch(&xs).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let (m, v) = post.mean_var(x).unwrap();
            assert_eq!(m.to_bits(), means[i].to_bits());
            assert_eq!(v.to_bits(), vars[i].to_bits());
        }
    }

    #[test]
    fn cov_diagonal_matches_var_and_duplicates_tie() {
        let post = toy_posterior(0.1);
        let xs = PointSet::new(1, vec![0.4, 0.4, 2.0]).unwrap();
        let cov = post.cov(&xs).unwrap();
        let (_, v) = post.mean_var(&[0.4]).unwrap();
        assert!((cov[(0, 0)] - v).abs() < 1e-10);
        assert!((cov[(0, 1)] - cov[(0, 0)]).abs() < 1e-10);
        assert!((cov[(1, 0)] - cov[(0, 0)]).abs() < 1e-10);
    }

    #[test]
    fn sample_paths_near_degenerate_cov_returns_means() {
        let s = 1e-9;
        let data =
            Dataset::new(PointSet::new(1, vec![0.5]).unwrap(), vec![0.7], s).unwrap();
        let post = Posterior::fit(KernelSpec::gaussian(1.0, 2.0).unwrap(), data).unwrap();
        let xs = PointSet::new(1, vec![0.5]).unwrap();
        let mut rng = RngState::new(11);
        let paths = post.sample_paths(&xs, 1, &mut rng).unwrap();
        let (m, _) = post.mean_var(&[0.5]).unwrap();
        assert!((paths[0][0] - m).abs() < 1e-4);
    }

    #[test]
    fn sample_paths_deterministic_per_seed() {
        let post = toy_posterior(0.01);
        let xs = PointSet::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let a = post.sample_paths(&xs, 3, &mut RngState::new(4)).unwrap();
        let b = post.sample_paths(&xs, 3, &mut RngState::new(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn query_cache_matches_posterior_paths() {
        let kernel = KernelSpec::gaussian(1.5, 1.0).unwrap();
        let noise = 0.01;
        let qs = PointSet::new(1, vec![-1.0, 0.1, 0.9, 2.0, 5.0]).unwrap();
        let mut post = Posterior::prior(kernel, 1, noise).unwrap();
        let mut cache = QueryCache::new(&post, qs.clone(), true).unwrap();
        for (x, y) in [(0.0, 0.4), (1.0, -0.1), (1.5, 0.7), (0.2, 0.3)] {
            post = post.with_observation(&[x], y).unwrap();
            cache.append(&post).unwrap();
        }
        let rebuilt = QueryCache::new(&post, qs.clone(), true).unwrap();
        assert_eq!(cache.means(), rebuilt.means());
        assert_eq!(cache.vars(), rebuilt.vars());
        let (means, vars) = post.mean_var_batch(&qs).unwrap();
        let cov = post.cov(&qs).unwrap();
        for i in 0..qs.len() {
            assert!((cache.means()[i] - means[i]).abs() < 1e-10);
            assert!((cache.vars()[i] - vars[i]).abs() < 1e-10);
            for j in 0..qs.len() {
                assert!((cache.cov().unwrap()[(i, j)] - cov[(i, j)]).abs() < 1e-9);
            }
        }
    }
}
