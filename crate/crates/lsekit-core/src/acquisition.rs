//! Acquisition rules for choosing the next evaluation point.
//!
//! All rules share one structure: build per-candidate scores from the current
//! posterior, then take the argmax (ties broken by lowest index). The
//! randomized-straddle family draws a fresh chi-squared weight `beta_t` with
//! 2 degrees of freedom once per iteration, shared by every candidate.

use alloc::format;
use alloc::vec::Vec;

use crate::discretize;
use crate::error::Error;
use crate::gp::Posterior;
use crate::linalg::Matrix;
use crate::math;
use crate::points::PointSet;
use crate::rng::RngState;

/// Effective domain cardinality used in the LSE beta schedule when the true
/// domain is continuous.
pub const LSE_CONTINUOUS_CARDINALITY: u64 = 1_000_000_000_000_000;

/// Acquisition rule plus its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "rule", rename_all = "snake_case")
)]
pub enum AcquisitionSpec {
    /// Uniform-random candidate.
    Random,
    /// Uncertainty sampling: argmax of the posterior variance.
    Us,
    /// Classic straddle with a fixed bandwidth multiplier:
    /// `score = min(ucb - theta, theta - lcb)` at `ucb/lcb = mean +- beta_sqrt * sd`.
    Straddle {
        /// Fixed `beta^{1/2}` (3.0 in the usual baseline).
        beta_sqrt: f64,
    },
    /// LSE acquisition with the theoretical beta schedule
    /// `beta_t = 2 ln(|X| pi^2 t^2 / (6 delta))`.
    LseAlg {
        /// Confidence parameter in (0, 1).
        delta: f64,
        /// Intersect confidence bands across iterations (monotone bands).
        /// Requires a candidate set that persists across iterations.
        #[cfg_attr(feature = "serde", serde(default))]
        use_intersection: bool,
    },
    /// MILE: expected size of the next-step super-level estimate. Finite
    /// domains only.
    Mile,
    /// Randomized straddle: straddle with `beta_t ~ chi-squared(2)`, clamped
    /// at zero.
    RandStraddle,
    /// Randomized straddle tuned for max-value loss on a finite domain:
    /// `beta_t = xi + 2 ln |X|`, `xi ~ chi-squared(2)`.
    RandStraddleMaxFinite,
    /// Randomized straddle tuned for max-value loss on a continuous box
    /// domain: `beta_t = 2 d ln(tau_t) + xi` with the cell-center
    /// discretization schedule `tau_t` for smoothness parameters `a, b` and
    /// box edge `r`.
    RandStraddleMaxInfinite {
        /// Smoothness constant `a` of the derivative tail bound.
        a: f64,
        /// Smoothness constant `b` of the derivative tail bound.
        b: f64,
        /// Edge length of the box domain `[0, r]^d`.
        r: f64,
    },
}

impl AcquisitionSpec {
    /// Checks rule parameters.
    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            AcquisitionSpec::Straddle { beta_sqrt } => {
                if !(beta_sqrt.is_finite() && beta_sqrt >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "straddle beta_sqrt must be finite and >= 0, got {beta_sqrt}"
                    )));
                }
            }
            AcquisitionSpec::LseAlg { delta, .. } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "lse delta must lie in (0, 1), got {delta}"
                    )));
                }
            }
            AcquisitionSpec::RandStraddleMaxInfinite { a, b, r } => {
                for (name, v) in [("a", a), ("b", b), ("r", r)] {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "discretization parameter {name} must be finite and > 0, got {v}"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Upper and lower confidence bounds at a set of points.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceBand {
    /// `mean + beta_sqrt * sd` per point.
    pub ucb: Vec<f64>,
    /// `mean - beta_sqrt * sd` per point.
    pub lcb: Vec<f64>,
}

impl ConfidenceBand {
    /// Band from precomputed moments.
    pub fn from_moments(means: &[f64], vars: &[f64], beta_sqrt: f64) -> Self {
        let mut ucb = Vec::with_capacity(means.len());
        let mut lcb = Vec::with_capacity(means.len());
        for (m, v) in means.iter().zip(vars) {
            let w = beta_sqrt * math::sqrt(v.max(0.0));
            ucb.push(m + w);
            lcb.push(m - w);
        }
        Self { ucb, lcb }
    }
}

/// Confidence band of a posterior over `xs` for a given `beta^{1/2}`.
pub fn confidence_band(
    post: &Posterior,
    xs: &PointSet,
    beta_sqrt: f64,
) -> Result<ConfidenceBand, Error> {
    if !(beta_sqrt.is_finite() && beta_sqrt >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta_sqrt must be finite and >= 0, got {beta_sqrt}"
        )));
    }
    let (means, vars) = post.mean_var_batch(xs)?;
    Ok(ConfidenceBand::from_moments(&means, &vars, beta_sqrt))
}

/// One draw of `beta_t ~ chi-squared(2)` via inverse transform:
/// `-2 ln U`, `U ~ Uniform(0, 1]`.
pub fn sample_beta_chi2(rng: &mut RngState) -> f64 {
    -2.0 * math::ln(rng.uniform_open())
}

/// Straddle score `min(ucb - theta, theta - lcb)`; may be negative.
pub fn straddle_score(band: &ConfidenceBand, theta: f64) -> Vec<f64> {
    band.ucb
        .iter()
        .zip(&band.lcb)
        .map(|(u, l)| (u - theta).min(theta - l))
        .collect()
}

/// Randomized-straddle score `max(min(ucb - theta, theta - lcb), 0)`.
pub fn randomized_straddle_score(band: &ConfidenceBand, theta: f64) -> Vec<f64> {
    band.ucb
        .iter()
        .zip(&band.lcb)
        .map(|(u, l)| (u - theta).min(theta - l).max(0.0))
        .collect()
}

/// LSE ambiguity score; the band may be the running intersection.
pub fn lse_score(band: &ConfidenceBand, theta: f64) -> Vec<f64> {
    straddle_score(band, theta)
}

/// Theoretical LSE beta schedule `beta_t = 2 ln(n pi^2 t^2 / (6 delta))`.
///
/// Returns `beta_t` itself; bands use its square root.
pub fn beta_lse_theoretical(n_candidates: u64, t: u64, delta: f64) -> Result<f64, Error> {
    if n_candidates == 0 || t == 0 {
        return Err(Error::InvalidParameter(
            "lse beta schedule needs n_candidates >= 1 and t >= 1".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lse delta must lie in (0, 1), got {delta}"
        )));
    }
    let n = n_candidates as f64;
    let t = t as f64;
    Ok(2.0 * math::ln(n * core::f64::consts::PI * core::f64::consts::PI * t * t / (6.0 * delta)))
}

/// Max-loss beta for a finite domain: `xi + 2 ln(n)`, `xi ~ chi-squared(2)`.
pub fn beta_maxloss_finite(n_candidates: u64, rng: &mut RngState) -> Result<f64, Error> {
    if n_candidates == 0 {
        return Err(Error::InvalidParameter("n_candidates must be >= 1".into()));
    }
    Ok(sample_beta_chi2(rng) + 2.0 * math::ln(n_candidates as f64))
}

/// Max-loss beta for a continuous box domain: `2 d ln(tau_t) + xi` with the
/// discretization schedule `tau_t`.
pub fn beta_maxloss_infinite(
    a: f64,
    b: f64,
    r: f64,
    d: usize,
    t: u64,
    rng: &mut RngState,
) -> Result<f64, Error> {
    let spec = discretize::GridSpec::new(a, b, r, d)?;
    let tau = discretize::tau_t(&spec, t)?;
    Ok(2.0 * d as f64 * math::ln(tau as f64) + sample_beta_chi2(rng))
}

/// MILE score from precomputed moments: for each candidate, the expected
/// number of points whose one-step-ahead posterior mean clears `theta`.
///
/// `cov` is the posterior covariance over `means.len()` points and
/// `noise_variance` the observation noise added to the predictive variance
/// of the candidate.
pub fn mile_score_from_moments(
    means: &[f64],
    vars: &[f64],
    cov: &Matrix,
    noise_variance: f64,
    theta: f64,
) -> Vec<f64> {
    let n = means.len();
    debug_assert_eq!(vars.len(), n);
    debug_assert_eq!(cov.rows(), n);
    debug_assert_eq!(cov.cols(), n);
    // Points whose mean is far from theta relative to their own sd keep their
    // current classification under any single observation; they contribute a
    // constant. |z| >= 8 leaves an error below 1e-15 per term.
    let mut base = 0.0;
    let mut active: Vec<usize> = Vec::new();
    for i in 0..n {
        let dev = means[i] - theta;
        if math::abs(dev) >= 8.0 * math::sqrt(vars[i].max(0.0)) {
            if dev >= 0.0 {
                base += 1.0;
            }
        } else {
            active.push(i);
        }
    }
    let mut scores = Vec::with_capacity(n);
    for x in 0..n {
        let s = math::sqrt(vars[x].max(0.0) + noise_variance);
        let mut score = base;
        for &i in &active {
            let dev = means[i] - theta;
            let c = math::abs(cov[(i, x)]);
            // nu = c / s is the sd of the one-step-ahead mean at i.
            if s == 0.0 || c == 0.0 || math::abs(dev) * s >= 8.0 * c {
                if dev >= 0.0 {
                    score += 1.0;
                }
            } else {
                score += math::normal_cdf(dev * s / c);
            }
        }
        scores.push(score);
    }
    scores
}

/// MILE score of a posterior over a finite candidate set.
pub fn mile_score(post: &Posterior, xs: &PointSet, theta: f64) -> Result<Vec<f64>, Error> {
    let (means, vars) = post.mean_var_batch(xs)?;
    let cov = post.cov(xs)?;
    Ok(mile_score_from_moments(&means, &vars, &cov, post.data().noise_variance(), theta))
}

/// Posterior moments handed to [`AcquisitionState::select_with`].
#[derive(Clone, Copy, Debug)]
pub struct Moments<'a> {
    /// Posterior means per candidate.
    pub means: &'a [f64],
    /// Posterior variances per candidate.
    pub vars: &'a [f64],
    /// Posterior covariance over the candidates; required by MILE only.
    pub cov: Option<&'a Matrix>,
    /// Observation noise variance of the model.
    pub noise_variance: f64,
}

/// Outcome of one selection step.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// Index of the chosen candidate.
    pub index: usize,
    /// Coordinates of the chosen candidate.
    pub point: Vec<f64>,
    /// The `beta_t` behind the band (NaN for rules without one).
    pub beta: f64,
    /// Winning score (NaN for the random rule).
    pub score: f64,
}

/// Per-run acquisition state: the rule, the iteration counter driving beta
/// schedules, and the running band intersection for LSE.
#[derive(Clone, Debug)]
pub struct AcquisitionState {
    spec: AcquisitionSpec,
    persistent: bool,
    lse_cardinality: Option<u64>,
    t: u64,
    tilde: Option<(Vec<f64>, Vec<f64>)>,
}

impl AcquisitionState {
    /// Prepares the rule. `persistent` declares that every future call will
    /// see the same candidate set; the LSE band intersection requires it.
    pub fn new(spec: AcquisitionSpec, persistent: bool) -> Result<Self, Error> {
        spec.validate()?;
        if let AcquisitionSpec::LseAlg { use_intersection: true, .. } = spec {
            if !persistent {
                return Err(Error::NonPersistentCandidates);
            }
        }
        Ok(Self { spec, persistent, lse_cardinality: None, t: 0, tilde: None })
    }

    /// Overrides the domain cardinality used by the LSE beta schedule
    /// (e.g. [`LSE_CONTINUOUS_CARDINALITY`] when candidates only subsample
    /// the true domain).
    pub fn with_lse_cardinality(mut self, n: u64) -> Self {
        self.lse_cardinality = Some(n);
        self
    }

    /// The rule in use.
    pub fn spec(&self) -> &AcquisitionSpec {
        &self.spec
    }

    /// Iterations performed so far.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// Runs one selection directly from a posterior.
    ///
    /// `mask`, when given, marks the selectable candidates with `true`;
    /// scores and beta shifts still see the full set.
    pub fn select_next(
        &mut self,
        post: &Posterior,
        xs: &PointSet,
        theta: f64,
        rng: &mut RngState,
        mask: Option<&[bool]>,
    ) -> Result<Selection, Error> {
        let (means, vars) = post.mean_var_batch(xs)?;
        let cov = if matches!(self.spec, AcquisitionSpec::Mile) {
            Some(post.cov(xs)?)
        } else {
            None
        };
        let moments = Moments {
            means: &means,
            vars: &vars,
            cov: cov.as_ref(),
            noise_variance: post.data().noise_variance(),
        };
        self.select_with(&moments, xs, theta, rng, mask)
    }

    /// Runs one selection from precomputed moments.
    pub fn select_with(
        &mut self,
        moments: &Moments<'_>,
        xs: &PointSet,
        theta: f64,
        rng: &mut RngState,
        mask: Option<&[bool]>,
    ) -> Result<Selection, Error> {
        let n = xs.len();
        if n == 0 {
            return Err(Error::EmptyCandidates);
        }
        if moments.means.len() != n || moments.vars.len() != n {
            return Err(Error::LengthMismatch { left: moments.means.len(), right: n });
        }
        if let Some(m) = mask {
            if m.len() != n {
                return Err(Error::LengthMismatch { left: m.len(), right: n });
            }
            if !m.iter().any(|&ok| ok) {
                return Err(Error::EmptyCandidates);
            }
        }
        self.t += 1;

        if matches!(self.spec, AcquisitionSpec::Random) {
            let allowed: Vec<usize> = (0..n)
                .filter(|&i| mask.map_or(true, |m| m[i]))
                .collect();
            let index = allowed[rng.index(allowed.len())];
            return Ok(Selection {
                index,
                point: xs.point(index).to_vec(),
                beta: f64::NAN,
                score: f64::NAN,
            });
        }

        let (beta, scores) = self.scores(moments, xs, theta, rng)?;
        let mut best: Option<usize> = None;
        for i in 0..n {
            if mask.map_or(true, |m| m[i]) {
                match best {
                    Some(b) if scores[i] > scores[b] => best = Some(i),
                    None => best = Some(i),
                    _ => {}
                }
            }
        }
        let index = best.expect("nonempty candidate set");
        Ok(Selection { index, point: xs.point(index).to_vec(), beta, score: scores[index] })
    }

    fn scores(
        &mut self,
        moments: &Moments<'_>,
        xs: &PointSet,
        theta: f64,
        rng: &mut RngState,
    ) -> Result<(f64, Vec<f64>), Error> {
        let n = xs.len();
        match self.spec {
            AcquisitionSpec::Random => unreachable!("handled by caller"),
            AcquisitionSpec::Us => Ok((f64::NAN, moments.vars.to_vec())),
            AcquisitionSpec::Straddle { beta_sqrt } => {
                let band = ConfidenceBand::from_moments(moments.means, moments.vars, beta_sqrt);
                Ok((beta_sqrt * beta_sqrt, straddle_score(&band, theta)))
            }
            AcquisitionSpec::LseAlg { delta, use_intersection } => {
                let cardinality = self.lse_cardinality.unwrap_or(n as u64);
                let beta = beta_lse_theoretical(cardinality, self.t, delta)?;
                let band =
                    ConfidenceBand::from_moments(moments.means, moments.vars, math::sqrt(beta));
                let band = if use_intersection {
                    if !self.persistent {
                        return Err(Error::NonPersistentCandidates);
                    }
                    let (tilde_u, tilde_l) = self.tilde.get_or_insert_with(|| {
                        (alloc::vec![f64::INFINITY; n], alloc::vec![f64::NEG_INFINITY; n])
                    });
                    if tilde_u.len() != n {
                        return Err(Error::LengthMismatch { left: tilde_u.len(), right: n });
                    }
                    for i in 0..n {
                        tilde_u[i] = tilde_u[i].min(band.ucb[i]);
                        tilde_l[i] = tilde_l[i].max(band.lcb[i]);
                    }
                    ConfidenceBand { ucb: tilde_u.clone(), lcb: tilde_l.clone() }
                } else {
                    band
                };
                Ok((beta, lse_score(&band, theta)))
            }
            AcquisitionSpec::Mile => {
                let cov = moments.cov.ok_or_else(|| {
                    Error::InvalidParameter("mile needs the posterior covariance".into())
                })?;
                Ok((
                    f64::NAN,
                    mile_score_from_moments(
                        moments.means,
                        moments.vars,
                        cov,
                        moments.noise_variance,
                        theta,
                    ),
                ))
            }
            AcquisitionSpec::RandStraddle => {
                let beta = sample_beta_chi2(rng);
                let band =
                    ConfidenceBand::from_moments(moments.means, moments.vars, math::sqrt(beta));
                Ok((beta, randomized_straddle_score(&band, theta)))
            }
            AcquisitionSpec::RandStraddleMaxFinite => {
                let beta = beta_maxloss_finite(n as u64, rng)?;
                let band =
                    ConfidenceBand::from_moments(moments.means, moments.vars, math::sqrt(beta));
                Ok((beta, randomized_straddle_score(&band, theta)))
            }
            AcquisitionSpec::RandStraddleMaxInfinite { a, b, r } => {
                let beta = beta_maxloss_infinite(a, b, r, xs.dim(), self.t, rng)?;
                let band =
                    ConfidenceBand::from_moments(moments.means, moments.vars, math::sqrt(beta));
                Ok((beta, randomized_straddle_score(&band, theta)))
            }
        }
    }
}
