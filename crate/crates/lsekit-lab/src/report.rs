//! Cross-seed aggregation and empirical checks of the regret bounds.

use std::collections::BTreeMap;

use lsekit_core::acquisition::AcquisitionSpec;
use lsekit_core::discretize::GridSpec;
use lsekit_core::level_set::{info_gain_greedy, BoundFamily, TheoryReport};
use lsekit_core::{PointSet, RngState};

use crate::config::{AlgorithmVariant, BlackboxSpec, DomainSpec, ExperimentConfig, LabError};
use crate::runner::RunRecord;

/// Mean, standard error, and the plotted six-SE band half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricStats {
    /// Sample mean across seeds.
    pub mean: f64,
    /// Standard error `sd / sqrt(n)` with the `n - 1` variance divisor;
    /// zero for a single seed.
    pub se: f64,
    /// `6 * se`, the error-bar half-width.
    pub err6: f64,
}

/// Cross-seed statistics for one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryRow {
    /// 1-based acquisition number.
    pub t: u64,
    /// Average misclassification loss.
    pub r_t: MetricStats,
    /// Super-level-set F-score.
    pub fscore: MetricStats,
    /// Maximum pointwise loss.
    pub max_loss: MetricStats,
}

fn stats(mut values: Vec<f64>) -> MetricStats {
    // Sorting first makes the sums independent of seed order.
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return MetricStats { mean: f64::NAN, se: f64::NAN, err6: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        var.sqrt() / (n as f64).sqrt()
    };
    MetricStats { mean, se, err6: 6.0 * se }
}

/// Per-iteration mean and standard error across seeds for `r_t`, the
/// F-score, and the max loss. Iterations skipped by the evaluation cadence
/// (rows holding NaN) do not contribute; the result is independent of the
/// order of `records`.
pub fn aggregate(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut by_t: BTreeMap<u64, (Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for rec in records {
        for row in &rec.rows {
            let entry = by_t.entry(row.t).or_default();
            if !row.r_t.is_nan() {
                entry.0.push(row.r_t);
            }
            if !row.fscore.is_nan() {
                entry.1.push(row.fscore);
            }
            if !row.max_loss.is_nan() {
                entry.2.push(row.max_loss);
            }
        }
    }
    by_t.into_iter()
        .map(|(t, (r, f, m))| SummaryRow {
            t,
            r_t: stats(r),
            fscore: stats(f),
            max_loss: stats(m),
        })
        .collect()
}

/// One iteration of the bound comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    /// 1-based acquisition number.
    pub t: u64,
    /// Inflated information-gain estimate used in the bound.
    pub gamma_hat: f64,
    /// Mean cumulative loss across seeds.
    pub observed_cumulative: f64,
    /// Theoretical bound on the cumulative loss.
    pub bound_cumulative: f64,
    /// Mean per-iteration loss across seeds.
    pub observed_rate: f64,
    /// Theoretical bound on the per-iteration loss.
    pub bound_rate: f64,
    /// Whether both observed values sit under their bounds.
    pub pass: bool,
}

/// Outcome of checking the expected-loss bounds against a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// The variant whose bounds were applied.
    pub variant: AlgorithmVariant,
    /// The noise-dependent constant in front of the bounds.
    pub c1: f64,
    /// True when the target is not a sample path of the model's own prior,
    /// in which case the bounds carry no guarantee and rows report no hard
    /// verdict.
    pub misspecified: bool,
    /// One comparison per iteration with an evaluated loss.
    pub rows: Vec<BoundRow>,
}

/// Points used for the greedy information-gain estimate on box domains.
const BOUND_PROBE_CAP: usize = 512;

/// Inflation turning the greedy information-gain estimate into a sound
/// upper envelope of the maximum: greedy achieves at least `1 - 1/e` of the
/// optimum, so dividing by that factor bounds the optimum from above.
const GREEDY_INFLATION: f64 = 1.0 / (1.0 - 1.0 / std::f64::consts::E);

/// Compares the empirical mean losses of `records` against the theoretical
/// bounds for the configured variant, with the information gain estimated
/// greedily over the domain and inflated to a sound upper envelope.
pub fn bound_check(records: &[RunRecord], config: &ExperimentConfig) -> Result<BoundReport, LabError> {
    if config.noise_variance <= 0.0 {
        return Err(LabError::Numeric(
            "bound check needs a positive noise variance".into(),
        ));
    }
    let horizon = config.iterations as usize;

    // Probe points for the information-gain estimate: the candidate set on
    // finite domains, a fixed uniform sample on boxes.
    let probe: PointSet = match &config.domain {
        DomainSpec::Grid { .. } | DomainSpec::TablePoints { .. } => {
            domain_points(config)?
        }
        DomainSpec::Box { bounds } => {
            let mut rng = RngState::substream(config.master_seed, config.n_seeds);
            let dim = bounds.len();
            let mut coords = Vec::with_capacity(BOUND_PROBE_CAP * dim);
            for _ in 0..BOUND_PROBE_CAP {
                for b in bounds {
                    coords.push(rng.uniform_in(b[0], b[1]));
                }
            }
            PointSet::new(dim, coords).map_err(|e| LabError::Numeric(e.to_string()))?
        }
    };

    let gamma_greedy = info_gain_greedy(config.kernel, &probe, config.noise_variance, horizon)
        .map_err(|e| LabError::Numeric(e.to_string()))?;
    let gamma_hat: Vec<f64> = gamma_greedy.iter().map(|g| g * GREEDY_INFLATION).collect();

    let family = match config.algorithm_variant {
        AlgorithmVariant::AvgLoss => BoundFamily::Avg,
        AlgorithmVariant::MaxFinite => BoundFamily::MaxFinite { n: config.finite_size().unwrap_or(probe.len()) as u64 },
        AlgorithmVariant::MaxInfinite => {
            let AcquisitionSpec::RandStraddleMaxInfinite { a, b, r } = config.acquisition else {
                return Err(LabError::Config(
                    "the box-schedule variant needs its matching acquisition rule".into(),
                ));
            };
            let grid = GridSpec::new(a, b, r, config.dim())
                .map_err(|e| LabError::Config(e.to_string()))?;
            BoundFamily::MaxInfinite { grid }
        }
    };
    let theory = TheoryReport::build(family, &gamma_hat, config.noise_variance)
        .map_err(|e| LabError::Numeric(e.to_string()))?;

    // Per-seed cumulative loss of the bound's metric (average loss for the
    // average variant, max loss for the max variants), then means across
    // seeds at each evaluated iteration.
    let mut cum_by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    let mut rate_by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for rec in records {
        let mut acc = 0.0;
        for row in &rec.rows {
            let v = match config.algorithm_variant {
                AlgorithmVariant::AvgLoss => row.r_t,
                _ => row.max_loss,
            };
            if v.is_nan() {
                continue;
            }
            acc += v;
            cum_by_t.entry(row.t).or_default().push(acc);
            rate_by_t.entry(row.t).or_default().push(v);
        }
    }

    let misspecified = match &config.blackbox {
        BlackboxSpec::GpSample { kernel, .. } => *kernel != config.kernel,
        _ => true,
    };
    let mut rows = Vec::new();
    for (&t, cums) in &cum_by_t {
        let idx = (t - 1) as usize;
        let observed_cumulative = stats(cums.clone()).mean;
        let observed_rate = stats(rate_by_t[&t].clone()).mean;
        let bound_cumulative = theory.cumulative[idx];
        let bound_rate = theory.rate[idx];
        rows.push(BoundRow {
            t,
            gamma_hat: gamma_hat[idx],
            observed_cumulative,
            bound_cumulative,
            observed_rate,
            bound_rate,
            pass: observed_cumulative <= bound_cumulative && observed_rate <= bound_rate,
        });
    }
    Ok(BoundReport { variant: config.algorithm_variant, c1: theory.c1, misspecified, rows })
}

/// Materializes the candidate set of a finite-domain config.
pub fn domain_points(config: &ExperimentConfig) -> Result<PointSet, LabError> {
    match (&config.domain, &config.blackbox) {
        (DomainSpec::Grid { bounds, points_per_axis, .. }, _) => {
            let pairs: Vec<(f64, f64)> = bounds.iter().map(|b| (b[0], b[1])).collect();
            lsekit_core::blackbox::make_grid(&pairs, points_per_axis)
                .map_err(|e| LabError::Config(e.to_string()))
        }
        (DomainSpec::TablePoints { .. }, BlackboxSpec::Tabulated { points, .. }) => {
            PointSet::from_rows(points).map_err(|e| LabError::Config(e.to_string()))
        }
        (DomainSpec::TablePoints { .. }, BlackboxSpec::SyntheticLifetime { seed, .. }) => {
            Ok(crate::ingest::synthetic_lifetime_table(*seed).xs().clone())
        }
        _ => Err(LabError::Config("domain has no finite candidate set".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EvalSpec;
    use crate::runner::{run_experiment, IterRow};
    use lsekit_core::blackbox::AnalyticFn;
    use lsekit_core::KernelSpec;

    fn row(seed: u64, t: u64, r_t: f64, fscore: f64, max_loss: f64) -> IterRow {
        IterRow {
            seed,
            t,
            x: vec![0.0],
            y: 0.0,
            beta: 2.0,
            r_t,
            big_r: r_t,
            max_loss,
            precision: 1.0,
            recall: 1.0,
            fscore,
            wall_ms: 0.0,
        }
    }

    fn record(seed: u64, rows: Vec<IterRow>) -> RunRecord {
        RunRecord {
            seed,
            dim: 1,
            rows,
            final_upper: vec![true],
            returned_iteration: 1,
            argmin_expected_loss: None,
            error: None,
        }
    }

    #[test]
    fn two_seed_hand_example() {
        let records = vec![
            record(0, vec![row(0, 1, 1.0, 0.5, 2.0)]),
            record(1, vec![row(1, 1, 3.0, 0.5, 2.0)]),
        ];
        let summary = aggregate(&records);
        assert_eq!(summary.len(), 1);
        let s = &summary[0];
        assert_eq!(s.t, 1);
        assert!((s.r_t.mean - 2.0).abs() < 1e-15);
        assert!((s.r_t.se - 1.0).abs() < 1e-15);
        assert!((s.r_t.err6 - 6.0).abs() < 1e-15);
        assert_eq!(s.max_loss.se, 0.0);
    }

    #[test]
    fn single_seed_has_zero_se() {
        let records = vec![record(0, vec![row(0, 1, 0.4, 0.9, 1.0), row(0, 2, 0.3, 0.95, 0.8)])];
        for s in aggregate(&records) {
            assert_eq!(s.r_t.se, 0.0);
            assert_eq!(s.fscore.err6, 0.0);
        }
    }

    #[test]
    fn aggregation_ignores_seed_order() {
        let a = vec![
            record(0, vec![row(0, 1, 0.25, 0.5, 1.0), row(0, 2, 0.125, 0.75, 0.5)]),
            record(1, vec![row(1, 1, 0.5, 0.25, 2.0), row(1, 2, 0.0625, 0.875, 0.25)]),
            record(2, vec![row(2, 1, 0.75, 0.125, 3.0)]),
        ];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(aggregate(&a), aggregate(&b));
    }

    #[test]
    fn nan_cadence_rows_are_skipped() {
        let records = vec![
            record(0, vec![row(0, 1, f64::NAN, f64::NAN, f64::NAN), row(0, 2, 0.5, 0.5, 0.5)]),
            record(1, vec![row(1, 1, 0.25, 0.5, 1.0), row(1, 2, 0.25, 0.5, 0.25)]),
        ];
        let summary = aggregate(&records);
        assert!((summary[0].r_t.mean - 0.25).abs() < 1e-15, "only the evaluated seed counts");
        assert_eq!(summary[0].r_t.se, 0.0);
        assert!((summary[1].r_t.mean - 0.375).abs() < 1e-15);
    }

    #[test]
    fn greedy_inflation_constant() {
        assert!((GREEDY_INFLATION - 1.5819767068693265).abs() < 1e-15);
    }

    fn exact_bayes_config() -> ExperimentConfig {
        let kernel = KernelSpec::gaussian(1.0, 2.0).unwrap();
        ExperimentConfig {
            blackbox: BlackboxSpec::GpSample { kernel, observation_noise: None },
            domain: DomainSpec::Grid {
                bounds: vec![[-5.0, 5.0], [-5.0, 5.0]],
                points_per_axis: vec![8, 8],
                no_reobserve: false,
            },
            kernel,
            noise_variance: 1e-2,
            theta: 0.5,
            acquisition: AcquisitionSpec::RandStraddle,
            iterations: 10,
            n_seeds: 4,
            master_seed: 7,
            eval: EvalSpec { refit: crate::config::RefitMode::Incremental, ..EvalSpec::default() },
            algorithm_variant: AlgorithmVariant::AvgLoss,
            initial_points: 1,
        }
    }

    #[test]
    fn exact_bayes_bounds_hold_on_a_desk_run() {
        let config = exact_bayes_config();
        let records = run_experiment(&config).unwrap();
        let report = bound_check(&records, &config).unwrap();
        assert!(!report.misspecified);
        assert_eq!(report.rows.len(), 10);
        for r in &report.rows {
            assert!(r.pass, "t={} observed {} vs bound {}", r.t, r.observed_cumulative, r.bound_cumulative);
            assert!(r.gamma_hat > 0.0);
        }
        // gamma is nondecreasing, so the cumulative bound is increasing.
        for w in report.rows.windows(2) {
            assert!(w[1].bound_cumulative >= w[0].bound_cumulative);
        }
    }

    #[test]
    fn analytic_target_sets_the_caveat_flag() {
        let mut config = exact_bayes_config();
        config.blackbox = BlackboxSpec::Analytic {
            name: AnalyticFn::Himmelblau,
            observation_noise: None,
        };
        config.domain = DomainSpec::Grid {
            bounds: vec![[-5.0, 5.0], [-5.0, 5.0]],
            points_per_axis: vec![6, 6],
            no_reobserve: false,
        };
        config.theta = 0.0;
        config.noise_variance = 50.0;
        config.iterations = 4;
        config.n_seeds = 2;
        let records = run_experiment(&config).unwrap();
        let report = bound_check(&records, &config).unwrap();
        assert!(report.misspecified);
    }

    #[test]
    fn mismatched_model_kernel_is_misspecified() {
        let mut config = exact_bayes_config();
        config.kernel = KernelSpec::gaussian(1.0, 3.0).unwrap();
        let records = run_experiment(&config).unwrap();
        let report = bound_check(&records, &config).unwrap();
        assert!(report.misspecified);
    }
}
