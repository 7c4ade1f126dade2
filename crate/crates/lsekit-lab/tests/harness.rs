//! End-to-end checks of the bundled configs and the CLI surface.

use std::path::Path;
use std::process::Command;

use lsekit_lab::config::{BlackboxSpec, RefitMode};
use lsekit_lab::emit::read_summary_csv;
use lsekit_lab::ingest::synthetic_lifetime_csv;
use lsekit_lab::runner::run_experiment;
use lsekit_lab::ExperimentConfig;

const GOLDEN: [(&str, &str); 7] = [
    ("table1_gp_sample", include_str!("../configs/table1_gp_sample.json")),
    ("table1_sinusoidal", include_str!("../configs/table1_sinusoidal.json")),
    ("table1_himmelblau", include_str!("../configs/table1_himmelblau.json")),
    ("table2_sphere", include_str!("../configs/table2_sphere.json")),
    ("table2_rosenbrock", include_str!("../configs/table2_rosenbrock.json")),
    ("table2_styblinski_tang", include_str!("../configs/table2_styblinski_tang.json")),
    ("lifetime_standin", include_str!("../configs/lifetime_standin.json")),
];

#[test]
fn golden_configs_load_without_edits() {
    for (name, text) in GOLDEN {
        let config = ExperimentConfig::from_json_str(text)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(config.n_seeds, 100, "{name}");
        assert!(config.iterations >= 200, "{name}");
    }
}

#[test]
fn sinusoidal_run_improves_over_time() {
    let mut config = ExperimentConfig::from_json_str(GOLDEN[1].1).unwrap();
    config.n_seeds = 1;
    config.eval.refit = RefitMode::Incremental;
    let records = run_experiment(&config).unwrap();
    let rec = &records[0];
    assert!(rec.error.is_none());
    assert_eq!(rec.rows.len(), 300);
    let first = rec.rows.first().unwrap().r_t;
    let last = rec.rows.last().unwrap().r_t;
    assert!(
        last < first,
        "r_t should shrink over a full run: first {first}, last {last}"
    );
}

#[test]
fn lifetime_standin_has_a_mixed_level_set() {
    let config = ExperimentConfig::from_json_str(GOLDEN[6].1).unwrap();
    let BlackboxSpec::SyntheticLifetime { seed, .. } = config.blackbox else {
        panic!("stand-in config should use the synthetic generator");
    };
    let table = lsekit_lab::ingest::synthetic_lifetime_table(seed);
    let above = table.values().iter().filter(|&&v| v >= config.theta).count();
    assert!(above > 0 && above < table.values().len(), "threshold must split the map");
}

fn lsekit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lsekit"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn cli_run_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let mut config = ExperimentConfig::from_json_str(GOLDEN[1].1).unwrap();
    config.iterations = 5;
    config.n_seeds = 3;
    config.domain = lsekit_lab::config::DomainSpec::Grid {
        bounds: vec![[0.0, 1.0], [0.0, 2.0]],
        points_per_axis: vec![10, 10],
        no_reobserve: false,
    };
    write(&config_path, &config.to_json_string());

    for out in ["a", "b"] {
        let status = lsekit()
            .args(["run", "--config"])
            .arg(&config_path)
            .args(["--seeds", "2", "--out"])
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let records_a = std::fs::read(dir.path().join("a/records.csv")).unwrap();
    let records_b = std::fs::read(dir.path().join("b/records.csv")).unwrap();
    assert_eq!(records_a, records_b, "same seed must give identical bytes");

    let summary_text = std::fs::read_to_string(dir.path().join("a/summary.csv")).unwrap();
    let summary = read_summary_csv(&summary_text).unwrap();
    assert_eq!(summary.len(), 5);
    assert_eq!(summary_text.lines().next().unwrap().split(',').count(), 10);

    // One series per summary file, and identical bytes on a rerun.
    std::fs::copy(dir.path().join("a/summary.csv"), dir.path().join("first.csv")).unwrap();
    std::fs::copy(dir.path().join("b/summary.csv"), dir.path().join("second.csv")).unwrap();
    let svg_path = dir.path().join("plot.svg");
    for _ in 0..2 {
        let status = lsekit()
            .args(["plot", "--summary"])
            .arg(dir.path().join("first.csv"))
            .arg("--summary")
            .arg(dir.path().join("second.csv"))
            .args(["--metric", "fscore", "--out"])
            .arg(&svg_path)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains(">first<") && svg.contains(">second<"), "legend lists file stems");
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn cli_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let bad_config = dir.path().join("bad.json");
    write(&bad_config, "{ not json");
    let status = lsekit()
        .args(["run", "--config"])
        .arg(&bad_config)
        .args(["--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "malformed config is a config error");

    let missing = dir.path().join("nope.json");
    let status = lsekit()
        .args(["run", "--config"])
        .arg(&missing)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2), "missing file is an I/O error");

    // Unknown plot metric.
    let summary = dir.path().join("s.csv");
    write(
        &summary,
        "t,r_t_mean,r_t_se,r_t_err6,fscore_mean,fscore_se,fscore_err6,max_loss_mean,max_loss_se,max_loss_err6\n1,0,0,0,0,0,0,0,0,0\n",
    );
    let status = lsekit()
        .args(["plot", "--summary"])
        .arg(&summary)
        .args(["--metric", "regret", "--out"])
        .arg(dir.path().join("x.svg"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_ingest_round_trips_the_synthetic_map() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("lifetime.csv");
    write(&csv_path, &synthetic_lifetime_csv(9));
    let out = dir.path().join("ingested.json");
    let status = lsekit()
        .args(["ingest", "--csv"])
        .arg(&csv_path)
        .args(["--strict", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let config = ExperimentConfig::from_json_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(config.iterations, 200);
    assert_eq!(config.theta, 0.0);

    // Strict mode rejects a truncated file with a row-count message.
    let short = dir.path().join("short.csv");
    write(&short, "x1,x2,lifetime\n8,8,1.0\n8,10,2.0\n10,8,3.0\n");
    let output = lsekit()
        .args(["ingest", "--csv"])
        .arg(&short)
        .args(["--strict", "--out"])
        .arg(dir.path().join("short.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("6586"));

    // Non-strict mode accepts it and clamps the budget.
    let status = lsekit()
        .args(["ingest", "--csv"])
        .arg(&short)
        .args(["--out"])
        .arg(dir.path().join("short.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let config =
        ExperimentConfig::from_json_str(&std::fs::read_to_string(dir.path().join("short.json")).unwrap())
            .unwrap();
    assert_eq!(config.iterations, 2);
}

#[test]
fn cli_bound_check_emits_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let mut config = ExperimentConfig::from_json_str(GOLDEN[0].1).unwrap();
    config.iterations = 6;
    config.n_seeds = 2;
    config.domain = lsekit_lab::config::DomainSpec::Grid {
        bounds: vec![[-5.0, 5.0], [-5.0, 5.0]],
        points_per_axis: vec![8, 8],
        no_reobserve: false,
    };
    config.noise_variance = 1e-2;
    write(&config_path, &config.to_json_string());
    let out = dir.path().join("bounds.csv");
    let status = lsekit()
        .args(["bound-check", "--config"])
        .arg(&config_path)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,gamma_hat,observed_cumulative,bound_cumulative,observed_rate,bound_rate,verdict"
    );
    assert_eq!(lines.clone().count(), 6);
    for line in lines {
        assert!(line.ends_with("PASS") || line.ends_with("FAIL"));
    }
}
