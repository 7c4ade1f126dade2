//! The experiment loop: realize the target function, run the acquisition
//! loop for each seed, and collect per-iteration records.
//!
//! Per-seed randomness comes from one substream of the master seed, consumed
//! in a fixed order: the sample-path table (GP-sample targets), the box-domain
//! test set, the initial observations, then per iteration the box candidate
//! draws, the acquisition's beta/selection draws, and the observation noise;
//! the returned-iteration estimator of the max-loss variants draws last.

use std::time::Instant;

use lsekit_core::acquisition::{
    AcquisitionSpec, AcquisitionState, Moments, LSE_CONTINUOUS_CARDINALITY,
};
use lsekit_core::blackbox::{make_grid, AnalyticFn, BlackBox, TabulatedFn};
use lsekit_core::discretize::{DiscretizationState, GridSpec};
use lsekit_core::level_set::{
    self, expected_avg_loss_from_moments, fscore, loss_r, maxvalue_loss, Classification,
};
use lsekit_core::{Dataset, Error as CoreError, PointSet, Posterior, QueryCache, RngState};

use crate::config::{
    AlgorithmVariant, BlackboxSpec, DomainSpec, ExperimentConfig, LabError, RefitMode,
};
use crate::ingest;

/// One acquisition's worth of logged data.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRow {
    /// Seed index (substream of the master seed).
    pub seed: u64,
    /// 1-based acquisition number.
    pub t: u64,
    /// Chosen evaluation point.
    pub x: Vec<f64>,
    /// Observed value.
    pub y: f64,
    /// Drawn or scheduled confidence parameter; NaN for rules without one.
    pub beta: f64,
    /// Average misclassification loss of this iteration's classification.
    pub r_t: f64,
    /// Running sum of the evaluated `r_t`.
    pub big_r: f64,
    /// Largest pointwise misclassification loss.
    pub max_loss: f64,
    /// Precision of the estimated super-level set.
    pub precision: f64,
    /// Recall of the estimated super-level set.
    pub recall: f64,
    /// F-score of the estimated super-level set.
    pub fscore: f64,
    /// Wall-clock milliseconds, 0 unless `eval.record_wall_ms` is on.
    pub wall_ms: f64,
}

/// Everything one seed produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    /// Seed index.
    pub seed: u64,
    /// Input dimension (the number of `x` columns).
    pub dim: usize,
    /// One row per completed acquisition.
    pub rows: Vec<IterRow>,
    /// Returned super-level membership over the evaluation set.
    pub final_upper: Vec<bool>,
    /// Which stored iteration the returned sets come from (the last one for
    /// the average-loss variant).
    pub returned_iteration: u64,
    /// Iteration minimizing the closed-form expected average loss under the
    /// final posterior, when tracking is on.
    pub argmin_expected_loss: Option<u64>,
    /// Diagnostic when the seed aborted early; rows up to the failure are
    /// kept.
    pub error: Option<String>,
}

/// Runs every seed of the experiment. Individual seeds that fail numerically
/// report the diagnostic in their record; the others proceed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, LabError> {
    config.validate()?;
    Ok((0..config.n_seeds).map(|s| run_seed(config, s)).collect())
}

/// Runs a single seed of a validated config.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> RunRecord {
    let mut rows = Vec::new();
    match execute_seed(config, seed, &mut rows) {
        Ok(out) => RunRecord {
            seed,
            dim: config.dim(),
            rows,
            final_upper: out.final_upper,
            returned_iteration: out.returned_iteration,
            argmin_expected_loss: out.argmin_expected_loss,
            error: None,
        },
        Err(e) => RunRecord {
            seed,
            dim: config.dim(),
            rows,
            final_upper: Vec::new(),
            returned_iteration: 0,
            argmin_expected_loss: None,
            error: Some(e.to_string()),
        },
    }
}

struct SeedOutcome {
    final_upper: Vec<bool>,
    returned_iteration: u64,
    argmin_expected_loss: Option<u64>,
}

fn num(e: CoreError) -> LabError {
    LabError::Numeric(e.to_string())
}

/// The target function realized for one seed.
enum Target {
    Analytic(AnalyticFn),
    Table(TabulatedFn),
}

impl Target {
    fn eval(&self, x: &[f64]) -> Result<f64, LabError> {
        match self {
            Target::Analytic(f) => f.eval(x).map_err(num),
            Target::Table(t) => t.eval(x).map_err(num),
        }
    }
}

fn execute_seed(
    config: &ExperimentConfig,
    seed: u64,
    rows: &mut Vec<IterRow>,
) -> Result<SeedOutcome, LabError> {
    let mut rng = RngState::substream(config.master_seed, seed);
    let theta = config.theta;
    let big_t = config.iterations;
    let dim = config.dim();
    let variant = config.algorithm_variant;
    let eval_cfg = &config.eval;
    let incremental = eval_cfg.refit == RefitMode::Incremental;
    let wants_mile = matches!(config.acquisition, AcquisitionSpec::Mile);

    // Candidate set of a finite domain, None for a box.
    let candidates: Option<PointSet> = match &config.domain {
        DomainSpec::Grid { bounds, points_per_axis, .. } => {
            let pairs: Vec<(f64, f64)> = bounds.iter().map(|b| (b[0], b[1])).collect();
            Some(make_grid(&pairs, points_per_axis).map_err(|e| LabError::Config(e.to_string()))?)
        }
        DomainSpec::TablePoints { .. } => None, // filled in with the table below
        DomainSpec::Box { .. } => None,
    };

    // Realize the target; GP-sample targets consume this seed's stream first.
    let target: Target = match &config.blackbox {
        BlackboxSpec::Analytic { name, .. } => Target::Analytic(*name),
        BlackboxSpec::GpSample { kernel, .. } => {
            let grid = candidates.as_ref().expect("validated: gp_sample is grid-only");
            let bb = BlackBox::gp_sample(*kernel, grid, &mut rng).map_err(num)?;
            match bb {
                BlackBox::Tabulated(t) => Target::Table(t),
                BlackBox::Analytic(_) => unreachable!("gp_sample tabulates"),
            }
        }
        BlackboxSpec::SyntheticLifetime { seed: gen_seed, .. } => {
            Target::Table(ingest::synthetic_lifetime_table(*gen_seed))
        }
        BlackboxSpec::Tabulated { points, values, .. } => {
            let xs = PointSet::from_rows(points).map_err(|e| LabError::Config(e.to_string()))?;
            let table = TabulatedFn::new(xs, values.clone())
                .map_err(|e| LabError::Config(e.to_string()))?;
            Target::Table(table)
        }
    };
    let candidates: Option<PointSet> = match (&config.domain, &target) {
        (DomainSpec::TablePoints { .. }, Target::Table(t)) => Some(t.xs().clone()),
        _ => candidates,
    };

    // Evaluation set and ground truth. Finite domains evaluate on the
    // candidates themselves, boxes on a per-seed random test set.
    let box_bounds: Option<Vec<[f64; 2]>> = match &config.domain {
        DomainSpec::Box { bounds } => Some(bounds.clone()),
        _ => None,
    };
    let eval_set: PointSet = match (&candidates, &box_bounds) {
        (Some(c), _) => c.clone(),
        (None, Some(bounds)) => {
            let mut coords = Vec::with_capacity(eval_cfg.test_set_size * dim);
            for _ in 0..eval_cfg.test_set_size {
                for b in bounds {
                    coords.push(rng.uniform_in(b[0], b[1]));
                }
            }
            PointSet::new(dim, coords).map_err(num)?
        }
        (None, None) => unreachable!("domain is finite or a box"),
    };
    let truth: Vec<f64> = match &target {
        Target::Table(t) if candidates.is_some() => t.values().to_vec(),
        _ => {
            let mut v = Vec::with_capacity(eval_set.len());
            for x in eval_set.iter() {
                v.push(target.eval(x)?);
            }
            v
        }
    };
    let truth_upper: Vec<bool> = truth.iter().map(|&f| f >= theta).collect();

    // Initial observations.
    let obs_noise = config.observation_noise();
    let obs_sd = obs_noise.sqrt();
    let no_reobserve = config.domain.no_reobserve();
    let n_cand = candidates.as_ref().map_or(0, |c| c.len());
    let mut observed = vec![false; n_cand];
    let mut data = Dataset::empty(dim, config.noise_variance)
        .map_err(|e| LabError::Config(e.to_string()))?;
    let mut last_point: Vec<f64> = Vec::new();
    for _ in 0..config.initial_points {
        let (x, fv): (Vec<f64>, f64) = match (&candidates, &box_bounds) {
            (Some(c), _) => {
                let i = loop {
                    let i = rng.index(c.len());
                    if !(no_reobserve && observed[i]) {
                        break i;
                    }
                };
                observed[i] = true;
                (c.point(i).to_vec(), truth[i])
            }
            (None, Some(bounds)) => {
                let x: Vec<f64> = bounds.iter().map(|b| rng.uniform_in(b[0], b[1])).collect();
                let fv = target.eval(&x)?;
                (x, fv)
            }
            (None, None) => unreachable!(),
        };
        let y = fv + if obs_noise > 0.0 { obs_sd * rng.standard_normal() } else { 0.0 };
        data.push(&x, y).map_err(num)?;
        last_point = x;
    }
    let mut post = Posterior::fit(config.kernel, data).map_err(num)?;

    // Running posterior moments over the fixed candidate set.
    let mut cache: Option<QueryCache> = match (&candidates, incremental) {
        (Some(c), true) => Some(QueryCache::new(&post, c.clone(), wants_mile).map_err(num)?),
        _ => None,
    };

    let mut acq = AcquisitionState::new(config.acquisition, candidates.is_some())
        .map_err(|e| LabError::Config(e.to_string()))?;
    if candidates.is_none() {
        acq = acq.with_lse_cardinality(LSE_CONTINUOUS_CARDINALITY);
    }

    let schedule_grid: Option<GridSpec> = match (variant, config.acquisition) {
        (AlgorithmVariant::MaxInfinite, AcquisitionSpec::RandStraddleMaxInfinite { a, b, r }) => {
            Some(GridSpec::new(a, b, r, dim).map_err(|e| LabError::Config(e.to_string()))?)
        }
        _ => None,
    };

    let track_classes = eval_cfg.track_argmin || variant != AlgorithmVariant::AvgLoss;
    let mut classes: Vec<Vec<bool>> = Vec::new();
    let mut big_r = 0.0;
    let mut final_snapshot: Option<(Vec<f64>, Vec<f64>, Vec<bool>, Posterior)> = None;

    for t in 1..=big_t {
        let timer = eval_cfg.record_wall_ms.then(Instant::now);
        let evaluate = t % eval_cfg.cadence == 0 || t == big_t;

        // Classification moments over the evaluation set plus the selection,
        // sharing one moment computation on finite domains.
        let (sel, means, vars): (_, Vec<f64>, Vec<f64>) = match &candidates {
            Some(cands) => {
                let mask_vec: Option<Vec<bool>> =
                    no_reobserve.then(|| observed.iter().map(|&o| !o).collect());
                let sel = match &cache {
                    Some(c) => {
                        let moments = Moments {
                            means: c.means(),
                            vars: c.vars(),
                            cov: c.cov(),
                            noise_variance: config.noise_variance,
                        };
                        acq.select_with(&moments, cands, theta, &mut rng, mask_vec.as_deref())
                            .map_err(num)?
                    }
                    None => acq
                        .select_next(&post, cands, theta, &mut rng, mask_vec.as_deref())
                        .map_err(num)?,
                };
                let (means, vars) = match &cache {
                    Some(c) => (c.means().to_vec(), c.vars().to_vec()),
                    None => post.mean_var_batch(cands).map_err(num)?,
                };
                (sel, means, vars)
            }
            None => {
                let bounds = box_bounds.as_ref().expect("box domain");
                let needed = evaluate || track_classes || t == big_t;
                let (means, vars) = if needed {
                    post.mean_var_batch(&eval_set).map_err(num)?
                } else {
                    (Vec::new(), Vec::new())
                };
                let mut coords = Vec::with_capacity((eval_cfg.candidate_count + 1) * dim);
                for _ in 0..eval_cfg.candidate_count {
                    for b in bounds {
                        coords.push(rng.uniform_in(b[0], b[1]));
                    }
                }
                coords.extend_from_slice(&last_point);
                let cands = PointSet::new(dim, coords).map_err(num)?;
                let (cmeans, cvars) = post.mean_var_batch(&cands).map_err(num)?;
                let moments = Moments {
                    means: &cmeans,
                    vars: &cvars,
                    cov: None,
                    noise_variance: config.noise_variance,
                };
                let sel =
                    acq.select_with(&moments, &cands, theta, &mut rng, None).map_err(num)?;
                (sel, means, vars)
            }
        };

        // Membership of the evaluation points; the box schedule variant
        // classifies through the nearest schedule-grid point.
        let upper: Vec<bool> = if let Some(grid) = &schedule_grid {
            let state = DiscretizationState::new(*grid, t).map_err(num)?;
            let mut mapped = Vec::with_capacity(eval_set.len() * dim);
            for x in eval_set.iter() {
                mapped.extend_from_slice(&state.nearest(x).map_err(num)?);
            }
            let mapped = PointSet::new(dim, mapped).map_err(num)?;
            let (mmeans, _) = post.mean_var_batch(&mapped).map_err(num)?;
            mmeans.iter().map(|&m| m >= theta).collect()
        } else if means.is_empty() {
            Vec::new()
        } else {
            means.iter().map(|&m| m >= theta).collect()
        };

        let (r_t, max_loss, precision, recall, f) = if evaluate {
            let class = Classification { theta, upper: upper.clone() };
            let r = loss_r(&class, &truth).map_err(num)?;
            let ml = maxvalue_loss(&class, &truth).map_err(num)?;
            let fs = fscore(&class, &truth_upper).map_err(num)?;
            big_r += r;
            (r, ml, fs.precision, fs.recall, fs.fscore)
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        };

        if track_classes {
            classes.push(upper.clone());
        }
        if t == big_t {
            final_snapshot = Some((means, vars, upper, post.clone()));
        }

        // Observe and update.
        let fv = match &candidates {
            Some(_) => truth[sel.index],
            None => target.eval(&sel.point)?,
        };
        let y = fv + if obs_noise > 0.0 { obs_sd * rng.standard_normal() } else { 0.0 };
        if no_reobserve {
            observed[sel.index] = true;
        }
        last_point = sel.point.clone();
        if incremental {
            post = post.with_observation(&sel.point, y).map_err(num)?;
            if let Some(c) = &mut cache {
                c.append(&post).map_err(num)?;
            }
        } else {
            let mut grown = post.data().clone();
            grown.push(&sel.point, y).map_err(num)?;
            post = Posterior::fit(config.kernel, grown).map_err(num)?;
        }

        rows.push(IterRow {
            seed,
            t,
            x: sel.point,
            y,
            beta: sel.beta,
            r_t,
            big_r,
            max_loss,
            precision,
            recall,
            fscore: f,
            wall_ms: timer.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1000.0),
        });
    }

    // Returned sets: H_T for the average-loss variant, H with the smallest
    // sampled expected max loss for the max variants; both judged under the
    // posterior the final classification was made with.
    let (fmeans, fvars, fupper, fpost) = final_snapshot.expect("iterations >= 1");
    let mut outcome = SeedOutcome {
        final_upper: fupper,
        returned_iteration: big_t,
        argmin_expected_loss: None,
    };
    match variant {
        AlgorithmVariant::AvgLoss => {
            if eval_cfg.track_argmin {
                let mut best = 0usize;
                let mut best_loss = f64::INFINITY;
                for (i, upper) in classes.iter().enumerate() {
                    let class = Classification { theta, upper: upper.clone() };
                    let loss = expected_avg_loss_from_moments(&fmeans, &fvars, &class)
                        .map_err(num)?;
                    if loss <= best_loss {
                        best_loss = loss;
                        best = i;
                    }
                }
                outcome.argmin_expected_loss = Some(best as u64 + 1);
            }
        }
        AlgorithmVariant::MaxFinite | AlgorithmVariant::MaxInfinite => {
            let probe_idx = subsample_indices(eval_set.len(), eval_cfg.tcheck_probe_cap);
            let mut probe_coords = Vec::with_capacity(probe_idx.len() * dim);
            for &j in &probe_idx {
                probe_coords.extend_from_slice(eval_set.point(j));
            }
            let probe = PointSet::new(dim, probe_coords).map_err(num)?;
            let probe_classes: Vec<Classification> = classes
                .iter()
                .map(|u| Classification {
                    theta,
                    upper: probe_idx.iter().map(|&j| u[j]).collect(),
                })
                .collect();
            let picked = level_set::estimate_t_check(
                &fpost,
                &probe_classes,
                &probe,
                eval_cfg.tcheck_paths,
                &mut rng,
            )
            .map_err(num)?;
            outcome.returned_iteration = picked as u64 + 1;
            outcome.final_upper = classes[picked].clone();
        }
    }
    Ok(outcome)
}

/// Up to `cap` evenly spaced indices into `0..n`.
fn subsample_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        (0..n).collect()
    } else {
        (0..cap).map(|j| j * n / cap).collect()
    }
}
