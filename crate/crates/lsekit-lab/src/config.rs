//! Experiment configuration: JSON schema, validation, defaults.

use std::fmt;

use lsekit_core::acquisition::AcquisitionSpec;
use lsekit_core::blackbox::AnalyticFn;
use lsekit_core::KernelSpec;
use serde::{Deserialize, Serialize};

/// Harness error split along the CLI exit codes: configuration problems and
/// IO exit with 2, numerical failures with 3.
#[derive(Clone, Debug, PartialEq)]
pub enum LabError {
    /// Invalid configuration or input data.
    Config(String),
    /// Numerical failure while running.
    Numeric(String),
    /// Filesystem problem.
    Io(String),
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "config error: {m}"),
            LabError::Numeric(m) => write!(f, "numerical failure: {m}"),
            LabError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for LabError {}

impl LabError {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Io(_) => 2,
            LabError::Numeric(_) => 3,
        }
    }
}

/// Where the target function comes from. `observation_noise` overrides the
/// model's `noise_variance` for the observation draw `y = f(x) + eps` —
/// e.g. noiseless measurements modeled with a small stabilizing variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BlackboxSpec {
    /// A named closed-form function.
    Analytic {
        /// Which formula.
        name: AnalyticFn,
        /// Observation-noise variance override.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observation_noise: Option<f64>,
    },
    /// A fresh prior sample path per seed, tabulated over the finite grid.
    GpSample {
        /// Kernel of the generating prior.
        kernel: KernelSpec,
        /// Observation-noise variance override.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observation_noise: Option<f64>,
    },
    /// Deterministic synthetic stand-in for the carrier-lifetime map: an
    /// 89 x 74 lattice with transformed values `f = 3 - lifetime`,
    /// lifetimes spanning [0.091587, 7.4613]. Fixed across seeds.
    SyntheticLifetime {
        /// Generator seed (fixes the data set, not the run).
        seed: u64,
        /// Observation-noise variance override.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observation_noise: Option<f64>,
    },
    /// An explicit table of points and values (ingested data).
    Tabulated {
        /// Support points, one row per point.
        points: Vec<Vec<f64>>,
        /// Function values aligned with `points`.
        values: Vec<f64>,
        /// Observation-noise variance override.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observation_noise: Option<f64>,
    },
}

impl BlackboxSpec {
    /// The observation-noise override, if any.
    pub fn observation_noise(&self) -> Option<f64> {
        match *self {
            BlackboxSpec::Analytic { observation_noise, .. }
            | BlackboxSpec::GpSample { observation_noise, .. }
            | BlackboxSpec::SyntheticLifetime { observation_noise, .. }
            | BlackboxSpec::Tabulated { observation_noise, .. } => observation_noise,
        }
    }
}

/// The input space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Finite uniform lattice (endpoints included) over a box.
    Grid {
        /// Per-axis `[lo, hi]`.
        bounds: Vec<[f64; 2]>,
        /// Points per axis, each at least 2.
        points_per_axis: Vec<usize>,
        /// Never query the same point twice within a seed.
        #[serde(default)]
        no_reobserve: bool,
    },
    /// Finite domain given by the tabulated black box's own points.
    TablePoints {
        /// Never query the same point twice within a seed.
        #[serde(default)]
        no_reobserve: bool,
    },
    /// Continuous box; the inner maximizer uses fresh random candidates.
    Box {
        /// Per-axis `[lo, hi]`.
        bounds: Vec<[f64; 2]>,
    },
}

impl DomainSpec {
    /// Whether the input space is a finite point set.
    pub fn is_finite(&self) -> bool {
        !matches!(self, DomainSpec::Box { .. })
    }

    /// The re-observation ban, when applicable.
    pub fn no_reobserve(&self) -> bool {
        match *self {
            DomainSpec::Grid { no_reobserve, .. } | DomainSpec::TablePoints { no_reobserve } => {
                no_reobserve
            }
            DomainSpec::Box { .. } => false,
        }
    }
}

/// How the posterior is maintained across iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefitMode {
    /// Refactor from scratch every iteration.
    Full,
    /// Extend the Cholesky factor by one row per observation and, on finite
    /// domains, keep running posterior moments over the candidate set.
    /// Agrees with `full` to well below 1e-8.
    Incremental,
}

/// Evaluation and execution knobs; all have defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSpec {
    /// Random test points per seed approximating box-domain metrics.
    pub test_set_size: usize,
    /// Compute metrics every this many iterations (the last iteration is
    /// always evaluated; skipped rows carry NaN metrics).
    pub cadence: u64,
    /// Fresh random candidates per iteration for box-domain maximization.
    pub candidate_count: usize,
    /// Posterior maintenance strategy.
    pub refit: RefitMode,
    /// Record wall-clock per iteration. Off by default so that artifacts
    /// are byte-deterministic.
    pub record_wall_ms: bool,
    /// Store every iteration's classification and report the index
    /// minimizing the closed-form expected average loss under the final
    /// posterior.
    pub track_argmin: bool,
    /// Posterior sample paths for the returned-iteration estimator of the
    /// max-loss variants.
    pub tcheck_paths: usize,
    /// Cap on the probe set used by that estimator (subsampled evenly from
    /// the evaluation set when larger).
    pub tcheck_probe_cap: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            test_set_size: 100_000,
            cadence: 1,
            candidate_count: 4096,
            refit: RefitMode::Full,
            record_wall_ms: false,
            track_argmin: false,
            tcheck_paths: 50,
            tcheck_probe_cap: 512,
        }
    }
}

/// Which loss the run targets; controls the returned classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmVariant {
    /// Average loss; returns the final classification.
    AvgLoss,
    /// Max-value loss on a finite domain; returns the stored classification
    /// minimizing the sampled expected max loss.
    MaxFinite,
    /// Max-value loss on a box domain with the discretization schedule;
    /// classifies through the nearest schedule-grid point.
    MaxInfinite,
}

fn default_initial_points() -> u64 {
    1
}

/// A complete experiment description; serializes losslessly to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Target function.
    pub blackbox: BlackboxSpec,
    /// Input space.
    pub domain: DomainSpec,
    /// GP model kernel.
    pub kernel: KernelSpec,
    /// GP model noise variance.
    pub noise_variance: f64,
    /// Level-set threshold.
    pub theta: f64,
    /// Acquisition rule.
    pub acquisition: AcquisitionSpec,
    /// Iterations per seed.
    pub iterations: u64,
    /// Number of seeds.
    pub n_seeds: u64,
    /// Master seed; seed `s` uses the substream `(master_seed, s)`.
    pub master_seed: u64,
    /// Evaluation and execution knobs.
    #[serde(default)]
    pub eval: EvalSpec,
    /// Loss variant.
    pub algorithm_variant: AlgorithmVariant,
    /// Random observations taken before the first acquisition.
    #[serde(default = "default_initial_points")]
    pub initial_points: u64,
}

impl ExperimentConfig {
    /// Parses and validates a JSON config.
    pub fn from_json_str(s: &str) -> Result<Self, LabError> {
        let config: Self =
            serde_json::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Pretty JSON that parses back to an identical value.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// The variance of the observation draw.
    pub fn observation_noise(&self) -> f64 {
        self.blackbox.observation_noise().unwrap_or(self.noise_variance)
    }

    /// Input dimension implied by the domain/blackbox pair.
    pub fn dim(&self) -> usize {
        match &self.domain {
            DomainSpec::Grid { bounds, .. } | DomainSpec::Box { bounds } => bounds.len(),
            DomainSpec::TablePoints { .. } => match &self.blackbox {
                BlackboxSpec::Tabulated { points, .. } => {
                    points.first().map_or(0, |p| p.len())
                }
                BlackboxSpec::SyntheticLifetime { .. } => 2,
                _ => 0,
            },
        }
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<(), LabError> {
        let cfg = |m: String| Err(LabError::Config(m));

        self.kernel.validate().map_err(|e| LabError::Config(e.to_string()))?;
        self.acquisition.validate().map_err(|e| LabError::Config(e.to_string()))?;
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return cfg(format!("noise_variance must be finite and >= 0, got {}", self.noise_variance));
        }
        if let Some(v) = self.blackbox.observation_noise() {
            if !(v.is_finite() && v >= 0.0) {
                return cfg(format!("observation_noise must be finite and >= 0, got {v}"));
            }
        }
        if !self.theta.is_finite() {
            return cfg(format!("theta must be finite, got {}", self.theta));
        }
        if self.iterations == 0 {
            return cfg("iterations must be at least 1".into());
        }
        if self.n_seeds == 0 {
            return cfg("n_seeds must be at least 1".into());
        }
        if self.initial_points == 0 {
            return cfg("initial_points must be at least 1".into());
        }
        let e = &self.eval;
        if e.cadence == 0 || e.candidate_count == 0 || e.test_set_size == 0 {
            return cfg("eval cadence, candidate_count and test_set_size must be positive".into());
        }
        if e.tcheck_paths == 0 || e.tcheck_probe_cap == 0 {
            return cfg("eval tcheck_paths and tcheck_probe_cap must be positive".into());
        }

        // domain shape
        let check_bounds = |bounds: &[[f64; 2]]| -> Result<(), LabError> {
            if bounds.is_empty() {
                return Err(LabError::Config("domain needs at least one axis".into()));
            }
            for (i, b) in bounds.iter().enumerate() {
                if !(b[0].is_finite() && b[1].is_finite() && b[0] < b[1]) {
                    return Err(LabError::Config(format!(
                        "axis {i} bounds must satisfy lo < hi, got [{}, {}]",
                        b[0], b[1]
                    )));
                }
            }
            Ok(())
        };
        match &self.domain {
            DomainSpec::Grid { bounds, points_per_axis, .. } => {
                check_bounds(bounds)?;
                if points_per_axis.len() != bounds.len() {
                    return cfg(format!(
                        "points_per_axis has {} entries for {} axes",
                        points_per_axis.len(),
                        bounds.len()
                    ));
                }
                if points_per_axis.iter().any(|&n| n < 2) {
                    return cfg("each grid axis needs at least 2 points".into());
                }
            }
            DomainSpec::Box { bounds } => check_bounds(bounds)?,
            DomainSpec::TablePoints { .. } => {}
        }

        // blackbox/domain pairing
        match (&self.blackbox, &self.domain) {
            (BlackboxSpec::Analytic { name, .. }, DomainSpec::Grid { bounds, .. })
            | (BlackboxSpec::Analytic { name, .. }, DomainSpec::Box { bounds }) => {
                if name.dim() != bounds.len() {
                    return cfg(format!(
                        "{name:?} takes {} inputs but the domain has {} axes",
                        name.dim(),
                        bounds.len()
                    ));
                }
            }
            (BlackboxSpec::Analytic { .. }, DomainSpec::TablePoints { .. }) => {
                return cfg("table_points domain needs a tabulated black box".into());
            }
            (BlackboxSpec::GpSample { .. }, DomainSpec::Grid { .. }) => {}
            (BlackboxSpec::GpSample { .. }, _) => {
                return cfg("gp_sample black boxes need a finite grid domain".into());
            }
            (BlackboxSpec::SyntheticLifetime { .. }, DomainSpec::TablePoints { .. }) => {}
            (BlackboxSpec::Tabulated { points, values, .. }, DomainSpec::TablePoints { .. }) => {
                if points.is_empty() {
                    return cfg("tabulated black box needs at least one point".into());
                }
                let d = points[0].len();
                if d == 0 {
                    return cfg("tabulated points need at least one coordinate".into());
                }
                if let Some(i) = points.iter().position(|p| p.len() != d) {
                    return cfg(format!("tabulated point {i} has {} coordinates, expected {d}", points[i].len()));
                }
                if values.len() != points.len() {
                    return cfg(format!(
                        "tabulated table has {} points but {} values",
                        points.len(),
                        values.len()
                    ));
                }
                if values.iter().any(|v| !v.is_finite())
                    || points.iter().flatten().any(|v| !v.is_finite())
                {
                    return cfg("tabulated coordinates and values must be finite".into());
                }
            }
            (BlackboxSpec::SyntheticLifetime { .. }, _) | (BlackboxSpec::Tabulated { .. }, _) => {
                return cfg("tabulated black boxes need the table_points domain".into());
            }
        }

        // acquisition/domain pairing
        if matches!(self.acquisition, AcquisitionSpec::Mile) && !self.domain.is_finite() {
            return cfg("mile handles finite domains only".into());
        }
        if let AcquisitionSpec::LseAlg { use_intersection: true, .. } = self.acquisition {
            if !self.domain.is_finite() {
                return cfg(
                    "lse band intersection needs a persistent finite candidate set".into(),
                );
            }
        }

        // variant constraints
        match self.algorithm_variant {
            AlgorithmVariant::AvgLoss | AlgorithmVariant::MaxFinite => {
                if self.algorithm_variant == AlgorithmVariant::MaxFinite
                    && !self.domain.is_finite()
                {
                    return cfg("max_finite variant needs a finite domain".into());
                }
            }
            AlgorithmVariant::MaxInfinite => {
                let AcquisitionSpec::RandStraddleMaxInfinite { r, .. } = self.acquisition else {
                    return cfg(
                        "max_infinite variant needs the rand_straddle_max_infinite rule for its discretization constants"
                            .into(),
                    );
                };
                let DomainSpec::Box { bounds } = &self.domain else {
                    return cfg("max_infinite variant needs a box domain".into());
                };
                for (i, b) in bounds.iter().enumerate() {
                    if b[0] != 0.0 || b[1] != r {
                        return cfg(format!(
                            "max_infinite variant needs every axis to be [0, {r}], axis {i} is [{}, {}]",
                            b[0], b[1]
                        ));
                    }
                }
            }
        }

        // the re-observation ban caps how many unique queries exist
        if self.domain.no_reobserve() {
            let n = self.finite_size();
            let want = self.initial_points as u128 + self.iterations as u128;
            if let Some(n) = n {
                if want > n as u128 {
                    return cfg(format!(
                        "no_reobserve needs initial_points + iterations <= {n} domain points, got {want}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of points of a finite domain, when computable from the config
    /// alone.
    pub fn finite_size(&self) -> Option<usize> {
        match &self.domain {
            DomainSpec::Grid { points_per_axis, .. } => {
                points_per_axis.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n))
            }
            DomainSpec::TablePoints { .. } => match &self.blackbox {
                BlackboxSpec::Tabulated { points, .. } => Some(points.len()),
                BlackboxSpec::SyntheticLifetime { .. } => Some(89 * 74),
                _ => None,
            },
            DomainSpec::Box { .. } => None,
        }
    }
}
