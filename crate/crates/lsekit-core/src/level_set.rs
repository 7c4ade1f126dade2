//! Level-set classification, misclassification losses, and the
//! information-gain machinery behind the loss bounds.

use alloc::vec::Vec;

use crate::discretize::{self, GridSpec};
use crate::error::Error;
use crate::gp::Posterior;
use crate::kernel::KernelSpec;
use crate::linalg::Cholesky;
use crate::math;
use crate::points::PointSet;
use crate::rng::RngState;

/// A super/sub-level split of a finite point set: `upper[i]` is true when
/// point `i` is estimated to satisfy `f(x_i) >= theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    /// Threshold the split was taken at.
    pub theta: f64,
    /// Estimated super-level membership per point.
    pub upper: Vec<bool>,
}

impl Classification {
    /// Splits by posterior mean: points with `mean >= theta` go to the upper
    /// set, so boundary points land in the upper set.
    pub fn from_means(means: &[f64], theta: f64) -> Self {
        Self { theta, upper: means.iter().map(|m| *m >= theta).collect() }
    }

    /// Number of points classified into the upper set.
    pub fn upper_count(&self) -> usize {
        self.upper.iter().filter(|&&u| u).count()
    }
}

/// Classifies `xs` by the posterior mean of `post`.
pub fn classify(post: &Posterior, xs: &PointSet, theta: f64) -> Result<Classification, Error> {
    let (means, _) = post.mean_var_batch(xs)?;
    Ok(Classification::from_means(&means, theta))
}

/// Pointwise misclassification loss: zero when the estimated side matches
/// the true side of `theta` (with `f = theta` counted as upper), `|f - theta|`
/// otherwise.
pub fn loss_point(f: f64, theta: f64, in_upper: bool) -> f64 {
    let truly_upper = f >= theta;
    if truly_upper == in_upper {
        0.0
    } else {
        math::abs(f - theta)
    }
}

/// Mean misclassification loss of a classification against true values.
pub fn loss_r(class: &Classification, truth: &[f64]) -> Result<f64, Error> {
    if class.upper.len() != truth.len() {
        return Err(Error::LengthMismatch { left: class.upper.len(), right: truth.len() });
    }
    if truth.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let total: f64 = truth
        .iter()
        .zip(&class.upper)
        .map(|(&f, &u)| loss_point(f, class.theta, u))
        .sum();
    Ok(total / truth.len() as f64)
}

/// Largest pointwise misclassification loss.
pub fn maxvalue_loss(class: &Classification, truth: &[f64]) -> Result<f64, Error> {
    if class.upper.len() != truth.len() {
        return Err(Error::LengthMismatch { left: class.upper.len(), right: truth.len() });
    }
    if truth.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut worst = 0.0;
    for (&f, &u) in truth.iter().zip(&class.upper) {
        let l = loss_point(f, class.theta, u);
        if l > worst {
            worst = l;
        }
    }
    Ok(worst)
}

/// Precision, recall, and F-score of a set estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FScore {
    /// Fraction of estimated members that are true members.
    pub precision: f64,
    /// Fraction of true members that were found.
    pub recall: f64,
    /// Harmonic mean of precision and recall.
    pub fscore: f64,
}

/// F-score of the estimated upper set against the true one.
///
/// Degenerate denominators use the standard conventions: an empty estimate
/// has precision 1 only when the true set is empty too (0 otherwise), an
/// empty true set has recall 1 only when the estimate is empty too, and a
/// zero precision+recall sum gives F-score 0.
pub fn fscore(class: &Classification, truth_upper: &[bool]) -> Result<FScore, Error> {
    if class.upper.len() != truth_upper.len() {
        return Err(Error::LengthMismatch { left: class.upper.len(), right: truth_upper.len() });
    }
    let mut overlap = 0usize;
    let mut estimated = 0usize;
    let mut actual = 0usize;
    for (&e, &a) in class.upper.iter().zip(truth_upper) {
        estimated += e as usize;
        actual += a as usize;
        overlap += (e && a) as usize;
    }
    let precision = if estimated == 0 {
        if actual == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        overlap as f64 / estimated as f64
    };
    let recall = if actual == 0 {
        if estimated == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        overlap as f64 / actual as f64
    };
    let fscore = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(FScore { precision, recall, fscore })
}

/// Posterior expectation of the pointwise loss at a point with posterior
/// moments `(mu, sigma^2)` classified into the given side.
///
/// With `alpha = (mu - theta) / sigma`:
/// upper side gives `sigma * (pdf(alpha) - alpha * cdf(-alpha))`,
/// lower side gives `sigma * (pdf(alpha) + alpha * cdf(alpha))`.
/// At `sigma = 0` the analytic limit is `max(theta - mu, 0)` on the upper
/// side and `max(mu - theta, 0)` on the lower.
pub fn expected_loss_closed_form(mu: f64, sigma: f64, theta: f64, in_upper: bool) -> f64 {
    debug_assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return if in_upper { (theta - mu).max(0.0) } else { (mu - theta).max(0.0) };
    }
    let alpha = (mu - theta) / sigma;
    let pdf = math::normal_pdf(alpha);
    // The survival function is evaluated as cdf(-alpha) rather than
    // 1 - cdf(alpha): past |alpha| ~ 8 the latter rounds to an ulp of 1 and
    // the cancellation can push the loss negative. The clamp mops up the
    // few-ulp residue left when both terms sit at the bottom of the tail.
    let v = if in_upper {
        sigma * (pdf - alpha * math::normal_cdf(-alpha))
    } else {
        sigma * (pdf + alpha * math::normal_cdf(alpha))
    };
    v.max(0.0)
}

/// Mean over `xs` of the expected pointwise loss of a stored classification
/// under the posterior `post`.
pub fn expected_avg_loss(
    post: &Posterior,
    class: &Classification,
    xs: &PointSet,
) -> Result<f64, Error> {
    let (means, vars) = post.mean_var_batch(xs)?;
    expected_avg_loss_from_moments(&means, &vars, class)
}

/// Same as [`expected_avg_loss`] but from precomputed moments.
pub fn expected_avg_loss_from_moments(
    means: &[f64],
    vars: &[f64],
    class: &Classification,
) -> Result<f64, Error> {
    if means.len() != class.upper.len() || vars.len() != class.upper.len() {
        return Err(Error::LengthMismatch { left: means.len(), right: class.upper.len() });
    }
    if means.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut total = 0.0;
    for i in 0..means.len() {
        total += expected_loss_closed_form(
            means[i],
            math::sqrt(vars[i].max(0.0)),
            class.theta,
            class.upper[i],
        );
    }
    Ok(total / means.len() as f64)
}

/// Picks the stored classification with the smallest estimated max-value
/// loss under the current posterior.
///
/// Draws `n_paths` sample paths of `post` at `xs`, scores every stored
/// classification by its average maximum pointwise loss over the paths, and
/// returns the 0-based index of the minimizer (ties go to the latest one).
pub fn estimate_t_check(
    post: &Posterior,
    classes: &[Classification],
    xs: &PointSet,
    n_paths: usize,
    rng: &mut RngState,
) -> Result<usize, Error> {
    if classes.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if n_paths == 0 {
        return Err(Error::InvalidParameter("need at least one sample path".into()));
    }
    for class in classes {
        if class.upper.len() != xs.len() {
            return Err(Error::LengthMismatch { left: class.upper.len(), right: xs.len() });
        }
    }
    let paths = post.sample_paths(xs, n_paths, rng)?;
    let mut best_idx = 0;
    let mut best_score = f64::INFINITY;
    for (i, class) in classes.iter().enumerate() {
        let mut acc = 0.0;
        for path in &paths {
            let mut worst = 0.0;
            for (j, &f) in path.iter().enumerate() {
                let l = loss_point(f, class.theta, class.upper[j]);
                if l > worst {
                    worst = l;
                }
            }
            acc += worst;
        }
        let score = acc / n_paths as f64;
        if score <= best_score {
            best_score = score;
            best_idx = i;
        }
    }
    Ok(best_idx)
}

/// Greedy estimate of the maximum information gain.
///
/// Returns the cumulative gains `gamma_hat_1..gamma_hat_horizon`, where step
/// `j` adds `0.5 * ln(1 + var_j(x*) / noise)` for the current
/// maximum-variance candidate `x*`. Greedy selection of a monotone
/// submodular objective is within a factor `1 - 1/e` of the maximum, so
/// `gamma_t <= gamma_hat_t / (1 - 1/e)`.
pub fn info_gain_greedy(
    kernel: KernelSpec,
    xs: &PointSet,
    noise_variance: f64,
    horizon: usize,
) -> Result<Vec<f64>, Error> {
    kernel.validate()?;
    if xs.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "information gain needs noise variance > 0, got {noise_variance}"
        )));
    }
    let n = xs.len();
    let mut vars: Vec<f64> = xs.iter().map(|x| kernel.eval_raw(x, x)).collect();
    let mut chol = Cholesky::empty();
    let mut chosen: Vec<usize> = Vec::new();
    let mut v: Vec<f64> = Vec::new();
    let mut gamma = Vec::with_capacity(horizon);
    let mut total = 0.0;
    for _ in 0..horizon {
        let mut best = 0;
        for i in 1..n {
            if vars[i] > vars[best] {
                best = i;
            }
        }
        total += 0.5 * math::ln(1.0 + vars[best].max(0.0) / noise_variance);
        gamma.push(total);

        let x_best = xs.point(best);
        let row: Vec<f64> =
            chosen.iter().map(|&j| kernel.eval_raw(x_best, xs.point(j))).collect();
        let diag = kernel.eval_raw(x_best, x_best) + noise_variance;
        let t = chosen.len();
        if chol.append_row(&row, diag).is_err() {
            return Err(Error::IllConditioned { jitter_limit: 0.0 });
        }
        let l_row = chol.row(t);
        let (l_prev, l_diag) = l_row.split_at(t);
        for i in 0..n {
            let k_new = kernel.eval_raw(x_best, xs.point(i));
            let mut acc = 0.0;
            for (j, lj) in l_prev.iter().enumerate() {
                acc += lj * v[j * n + i];
            }
            let u = (k_new - acc) / l_diag[0];
            vars[i] = (vars[i] - u * u).max(0.0);
            v.push(u);
        }
        chosen.push(best);
    }
    Ok(gamma)
}

/// Which loss bound to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundKind {
    /// Cumulative average-loss bound `sqrt(C1 t gamma_t)` with
    /// `C1 = 4 / ln(1 + 1/noise)`.
    AvgCumulative,
    /// Rate form `sqrt(C1 gamma_t / t)`.
    AvgRate,
    /// Cumulative max-loss bound on a finite domain of `n` points:
    /// `sqrt(C1' t gamma_t)` with `C1' = (4 + 4 ln n) / ln(1 + 1/noise)`.
    MaxFiniteCumulative {
        /// Domain size.
        n: u64,
    },
    /// Rate form of the finite max-loss bound.
    MaxFiniteRate {
        /// Domain size.
        n: u64,
    },
    /// Cumulative max-loss bound on a box domain:
    /// `pi^2/6 + sqrt(C1'' t gamma_t (2 + s_t))` with
    /// `C1'' = 2 / ln(1 + 1/noise)` and `s_t = 2 d ln(tau_t)`.
    MaxInfiniteCumulative {
        /// Discretization shift `s_t`.
        s_t: f64,
    },
    /// Rate form `pi^2/(6t) + sqrt(C1'' gamma_t (2 + s_t) / t)`.
    MaxInfiniteRate {
        /// Discretization shift `s_t`.
        s_t: f64,
    },
}

/// `C1 = 4 / ln(1 + 1/noise)`, the constant of the average-loss bounds.
pub fn c1(noise_variance: f64) -> Result<f64, Error> {
    if !(noise_variance.is_finite() && noise_variance > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "bound constants need noise variance > 0, got {noise_variance}"
        )));
    }
    Ok(4.0 / math::ln(1.0 + 1.0 / noise_variance))
}

/// Evaluates the right-hand side of a loss bound at iteration `t` for an
/// information gain `gamma_t`.
pub fn bound_rhs(kind: BoundKind, t: u64, gamma_t: f64, noise_variance: f64) -> Result<f64, Error> {
    if t == 0 {
        return Err(Error::InvalidParameter("bounds need t >= 1".into()));
    }
    if !(gamma_t.is_finite() && gamma_t >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "bounds need gamma_t >= 0, got {gamma_t}"
        )));
    }
    let c1 = c1(noise_variance)?;
    let t = t as f64;
    let pi2_6 = core::f64::consts::PI * core::f64::consts::PI / 6.0;
    match kind {
        BoundKind::AvgCumulative => Ok(math::sqrt(c1 * t * gamma_t)),
        BoundKind::AvgRate => Ok(math::sqrt(c1 * gamma_t / t)),
        BoundKind::MaxFiniteCumulative { n } | BoundKind::MaxFiniteRate { n } => {
            if n == 0 {
                return Err(Error::InvalidParameter("finite bound needs n >= 1".into()));
            }
            let c1_tilde = c1 * (1.0 + math::ln(n as f64));
            Ok(match kind {
                BoundKind::MaxFiniteCumulative { .. } => math::sqrt(c1_tilde * t * gamma_t),
                _ => math::sqrt(c1_tilde * gamma_t / t),
            })
        }
        BoundKind::MaxInfiniteCumulative { s_t } | BoundKind::MaxInfiniteRate { s_t } => {
            if !(s_t.is_finite() && s_t >= 0.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "infinite bound needs s_t >= 0, got {s_t}"
                )));
            }
            let c1_check = c1 / 2.0;
            Ok(match kind {
                BoundKind::MaxInfiniteCumulative { .. } => {
                    pi2_6 + math::sqrt(c1_check * t * gamma_t * (2.0 + s_t))
                }
                _ => pi2_6 / t + math::sqrt(c1_check * gamma_t * (2.0 + s_t) / t),
            })
        }
    }
}

/// Bound family matching an experiment's loss variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundFamily {
    /// Average-loss bounds.
    Avg,
    /// Finite-domain max-loss bounds.
    MaxFinite {
        /// Domain size.
        n: u64,
    },
    /// Box-domain max-loss bounds with the discretization schedule.
    MaxInfinite {
        /// Schedule constants of the run.
        grid: GridSpec,
    },
}

/// Per-iteration bound table built from an information-gain series.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryReport {
    /// The constant `C1`.
    pub c1: f64,
    /// Information gain per iteration, as supplied.
    pub gamma: Vec<f64>,
    /// Cumulative-loss bound per iteration.
    pub cumulative: Vec<f64>,
    /// Loss-rate bound per iteration.
    pub rate: Vec<f64>,
}

impl TheoryReport {
    /// Evaluates the bounds of `family` at `t = 1..gamma.len()`.
    ///
    /// `gamma` should already include any inflation the caller wants (for a
    /// greedy estimate, dividing by `1 - 1/e` makes the result a sound upper
    /// bound on the true maximum gain).
    pub fn build(family: BoundFamily, gamma: &[f64], noise_variance: f64) -> Result<Self, Error> {
        let c1 = c1(noise_variance)?;
        let mut cumulative = Vec::with_capacity(gamma.len());
        let mut rate = Vec::with_capacity(gamma.len());
        for (i, &g) in gamma.iter().enumerate() {
            let t = (i + 1) as u64;
            let (ck, rk) = match family {
                BoundFamily::Avg => (BoundKind::AvgCumulative, BoundKind::AvgRate),
                BoundFamily::MaxFinite { n } => {
                    (BoundKind::MaxFiniteCumulative { n }, BoundKind::MaxFiniteRate { n })
                }
                BoundFamily::MaxInfinite { grid } => {
                    let tau = discretize::tau_t(&grid, t)?;
                    let s_t = 2.0 * grid.d as f64 * math::ln(tau as f64);
                    (
                        BoundKind::MaxInfiniteCumulative { s_t },
                        BoundKind::MaxInfiniteRate { s_t },
                    )
                }
            };
            cumulative.push(bound_rhs(ck, t, g, noise_variance)?);
            rate.push(bound_rhs(rk, t, g, noise_variance)?);
        }
        Ok(Self { c1, gamma: gamma.to_vec(), cumulative, rate })
    }
}
