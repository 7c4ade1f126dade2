//! Lifetime-map CSV ingestion and a synthetic stand-in generator.
//!
//! The expected format is UTF-8 CSV with header `x1,x2,lifetime` (LF or
//! CRLF). Ingestion builds a ready-to-run tabulated config applying the
//! `f = 3 - lifetime` transform with threshold 0; strict mode additionally
//! demands the full 89 x 74 measurement lattice with both coordinates in
//! `{8, 10, ..}`.

use std::collections::HashMap;
use std::fmt::Write as _;

use lsekit_core::acquisition::AcquisitionSpec;
use lsekit_core::blackbox::TabulatedFn;
use lsekit_core::{KernelSpec, PointSet, RngState};

use crate::config::{
    AlgorithmVariant, BlackboxSpec, DomainSpec, EvalSpec, ExperimentConfig, LabError,
};

/// Lattice width of a full lifetime map: x1 takes `2a + 6` for `a = 1..=89`.
pub const X1_COUNT: usize = 89;
/// Lattice height of a full lifetime map: x2 takes `2a + 6` for `a = 1..=74`.
pub const X2_COUNT: usize = 74;
/// Smallest lifetime value the generator emits.
pub const LIFETIME_MIN: f64 = 0.091587;
/// Largest lifetime value the generator emits.
pub const LIFETIME_MAX: f64 = 7.4613;

/// Parses a lifetime CSV into `(x1, x2, lifetime)` rows, rejecting malformed
/// rows and duplicate coordinates with their 1-based row numbers (the header
/// is row 1).
pub fn parse_lifetime_csv(text: &str) -> Result<Vec<(f64, f64, f64)>, LabError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines
        .next()
        .ok_or_else(|| LabError::Config("lifetime CSV is empty".into()))?;
    if header != "x1,x2,lifetime" {
        return Err(LabError::Config(format!(
            "row 1: header is `{header}`, expected `x1,x2,lifetime`"
        )));
    }
    let mut rows = Vec::new();
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(LabError::Config(format!(
                "row {line_no}: {} fields, expected 3",
                fields.len()
            )));
        }
        let parse = |f: &str| -> Result<f64, LabError> {
            let v: f64 = f.trim().parse().map_err(|_| {
                LabError::Config(format!("row {line_no}: `{f}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(LabError::Config(format!("row {line_no}: `{f}` is not finite")));
            }
            Ok(v)
        };
        let x1 = parse(fields[0])?;
        let x2 = parse(fields[1])?;
        let lifetime = parse(fields[2])?;
        if let Some(first) = seen.insert((x1.to_bits(), x2.to_bits()), line_no) {
            return Err(LabError::Config(format!(
                "row {line_no}: duplicate coordinates ({x1}, {x2}) first seen at row {first}"
            )));
        }
        rows.push((x1, x2, lifetime));
    }
    if rows.is_empty() {
        return Err(LabError::Config("lifetime CSV has no data rows".into()));
    }
    Ok(rows)
}

/// Strict-mode layout check: every row must sit on the 89 x 74 lattice and
/// the file must cover it completely.
pub fn check_lattice(rows: &[(f64, f64, f64)]) -> Result<(), LabError> {
    let on_axis = |v: f64, count: usize| {
        v.fract() == 0.0 && v >= 8.0 && v <= (2 * count + 6) as f64 && (v as i64) % 2 == 0
    };
    for (i, &(x1, x2, _)) in rows.iter().enumerate() {
        if !on_axis(x1, X1_COUNT) || !on_axis(x2, X2_COUNT) {
            return Err(LabError::Config(format!(
                "row {}: point ({x1}, {x2}) is off the measurement lattice",
                i + 2
            )));
        }
    }
    let expected = X1_COUNT * X2_COUNT;
    if rows.len() != expected {
        return Err(LabError::Config(format!(
            "lattice layout needs {expected} rows, found {}",
            rows.len()
        )));
    }
    Ok(())
}

/// Builds a runnable config from parsed lifetime rows: tabulated target with
/// values `3 - lifetime`, threshold 0, a Matern-3/2 model, noiseless
/// re-observation-free queries, and up to 200 acquisitions.
pub fn config_from_rows(rows: &[(f64, f64, f64)]) -> Result<ExperimentConfig, LabError> {
    let points: Vec<Vec<f64>> = rows.iter().map(|&(x1, x2, _)| vec![x1, x2]).collect();
    let values: Vec<f64> = rows.iter().map(|&(_, _, lt)| 3.0 - lt).collect();
    let initial_points = 1usize;
    let iterations = 200usize.min(rows.len().saturating_sub(initial_points)).max(1);
    let config = ExperimentConfig {
        blackbox: BlackboxSpec::Tabulated { points, values, observation_noise: Some(0.0) },
        domain: DomainSpec::TablePoints { no_reobserve: true },
        kernel: KernelSpec::matern32(4.0, 25.0).map_err(|e| LabError::Config(e.to_string()))?,
        noise_variance: 1e-6,
        theta: 0.0,
        acquisition: AcquisitionSpec::RandStraddle,
        iterations: iterations as u64,
        n_seeds: 100,
        master_seed: 0,
        eval: EvalSpec::default(),
        algorithm_variant: AlgorithmVariant::AvgLoss,
        initial_points: initial_points as u64,
    };
    config.validate()?;
    Ok(config)
}

/// Full ingestion pipeline: parse, optionally check the lattice, build the
/// config.
pub fn ingest_lifetime_csv(text: &str, strict: bool) -> Result<ExperimentConfig, LabError> {
    let rows = parse_lifetime_csv(text)?;
    if strict {
        check_lattice(&rows)?;
    }
    config_from_rows(&rows)
}

fn lattice_axis(count: usize) -> impl Iterator<Item = f64> {
    (1..=count).map(|a| (2 * a + 6) as f64)
}

/// Deterministic synthetic lifetime map in the real-data format: a smooth
/// random field over the 89 x 74 lattice, rescaled so its minimum and
/// maximum hit the published value range exactly.
pub fn synthetic_lifetime_rows(seed: u64) -> Vec<(f64, f64, f64)> {
    let mut rng = RngState::new(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            let amp = rng.uniform_in(0.5, 1.5);
            let w1 = rng.uniform_in(0.01, 0.06) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            let w2 = rng.uniform_in(0.01, 0.06) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
            let phase = rng.uniform_in(0.0, core::f64::consts::TAU);
            (amp, w1, w2, phase)
        })
        .collect();
    let field = |x1: f64, x2: f64| -> f64 {
        waves.iter().map(|&(a, w1, w2, p)| a * (w1 * x1 + w2 * x2 + p).cos()).sum()
    };
    let mut rows = Vec::with_capacity(X1_COUNT * X2_COUNT);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x1 in lattice_axis(X1_COUNT) {
        for x2 in lattice_axis(X2_COUNT) {
            let g = field(x1, x2);
            lo = lo.min(g);
            hi = hi.max(g);
            rows.push((x1, x2, g));
        }
    }
    assert!(hi > lo, "degenerate synthetic field");
    for row in &mut rows {
        // The endpoints are pinned exactly; the affine map alone can miss
        // them by a rounding step.
        row.2 = if row.2 == hi {
            LIFETIME_MAX
        } else if row.2 == lo {
            LIFETIME_MIN
        } else {
            LIFETIME_MIN + (LIFETIME_MAX - LIFETIME_MIN) * (row.2 - lo) / (hi - lo)
        };
    }
    rows
}

/// The synthetic map as CSV text in the ingestion format.
pub fn synthetic_lifetime_csv(seed: u64) -> String {
    let mut out = String::from("x1,x2,lifetime\n");
    for (x1, x2, lt) in synthetic_lifetime_rows(seed) {
        let _ = writeln!(out, "{x1},{x2},{lt}");
    }
    out
}

/// The synthetic map as a tabulated target with the `3 - lifetime`
/// transform already applied.
pub fn synthetic_lifetime_table(seed: u64) -> TabulatedFn {
    let rows = synthetic_lifetime_rows(seed);
    let mut xs = PointSet::empty(2);
    let mut values = Vec::with_capacity(rows.len());
    for (x1, x2, lt) in rows {
        xs.push(&[x1, x2]).expect("fixed dimension");
        values.push(3.0 - lt);
    }
    TabulatedFn::new(xs, values).expect("lattice table is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_hits_the_threshold_at_three() {
        let rows = vec![(8.0, 8.0, 3.0), (8.0, 10.0, 7.4613), (10.0, 8.0, 0.091587)];
        let config = config_from_rows(&rows).unwrap();
        let BlackboxSpec::Tabulated { values, .. } = &config.blackbox else {
            panic!("expected a tabulated target");
        };
        assert_eq!(values[0], 0.0);
        assert!((values[1] - -4.4613).abs() < 1e-12);
        assert_eq!(config.theta, 0.0);
        assert_eq!(config.iterations, 2, "budget clamps to the table size");
    }

    #[test]
    fn header_and_field_errors_carry_row_numbers() {
        assert!(parse_lifetime_csv("a,b,c\n1,2,3\n").unwrap_err().to_string().contains("row 1"));
        let err = parse_lifetime_csv("x1,x2,lifetime\n8,8,1.0\n8,10\n").unwrap_err().to_string();
        assert!(err.contains("row 3") && err.contains("2 fields"), "{err}");
        let err = parse_lifetime_csv("x1,x2,lifetime\n8,eight,1.0\n").unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }

    #[test]
    fn duplicates_name_both_rows() {
        let err = parse_lifetime_csv("x1,x2,lifetime\n8,8,1.0\n8,10,2.0\n8,8,3.0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("row 4") && err.contains("row 2"), "{err}");
    }

    #[test]
    fn crlf_is_accepted() {
        let rows = parse_lifetime_csv("x1,x2,lifetime\r\n8,8,1.5\r\n10,8,2.5\r\n").unwrap();
        assert_eq!(rows, vec![(8.0, 8.0, 1.5), (10.0, 8.0, 2.5)]);
    }

    #[test]
    fn strict_mode_rejects_a_three_row_file() {
        let rows = parse_lifetime_csv("x1,x2,lifetime\n8,8,1.0\n8,10,2.0\n10,8,3.0\n").unwrap();
        let err = check_lattice(&rows).unwrap_err().to_string();
        assert!(err.contains("6586"), "{err}");
    }

    #[test]
    fn strict_mode_rejects_off_lattice_points() {
        let rows = vec![(9.0, 8.0, 1.0)];
        let err = check_lattice(&rows).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("off the measurement lattice"), "{err}");
    }

    #[test]
    fn synthetic_map_passes_strict_ingestion() {
        let csv = synthetic_lifetime_csv(11);
        let config = ingest_lifetime_csv(&csv, true).unwrap();
        assert_eq!(config.iterations, 200);
        assert!(config.domain.no_reobserve());
        let BlackboxSpec::Tabulated { values, .. } = &config.blackbox else {
            panic!("expected a tabulated target");
        };
        assert_eq!(values.len(), X1_COUNT * X2_COUNT);
    }

    #[test]
    fn synthetic_map_spans_the_published_range_exactly() {
        let rows = synthetic_lifetime_rows(3);
        let lo = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(lo, LIFETIME_MIN);
        assert_eq!(hi, LIFETIME_MAX);
        assert_eq!(synthetic_lifetime_csv(3), synthetic_lifetime_csv(3));
        assert_ne!(synthetic_lifetime_csv(3), synthetic_lifetime_csv(4));
    }

    #[test]
    fn table_applies_the_transform() {
        let rows = synthetic_lifetime_rows(5);
        let table = synthetic_lifetime_table(5);
        assert_eq!(table.values().len(), rows.len());
        for (i, (_, _, lt)) in rows.iter().enumerate() {
            assert_eq!(table.value_at(i), 3.0 - lt);
        }
    }
}
