//! Command-line front end for running, plotting, bound-checking, and
//! ingesting level-set experiments.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use lsekit_lab::config::LabError;
use lsekit_lab::emit::{
    bound_csv_string, plot_svg, read_summary_csv, read_text, records_csv_string,
    summary_csv_string, write_text, PlotMetric,
};
use lsekit_lab::ingest::ingest_lifetime_csv;
use lsekit_lab::report::{aggregate, bound_check};
use lsekit_lab::runner::run_experiment;
use lsekit_lab::ExperimentConfig;

#[derive(Parser)]
#[command(name = "lsekit", version, about = "Active level-set estimation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write records.csv and summary.csv.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed count.
        #[arg(long)]
        seeds: Option<u64>,
        /// Output directory (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot one metric of one or more summary CSVs as an SVG.
    Plot {
        /// Summary CSV; repeat for one series per file.
        #[arg(long, required = true)]
        summary: Vec<PathBuf>,
        /// Metric column: r_t, fscore, or max_loss.
        #[arg(long)]
        metric: String,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a config and compare its losses against the theoretical bounds.
    BoundCheck {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a lifetime-map CSV into a runnable config.
    Ingest {
        /// Input CSV with header x1,x2,lifetime.
        #[arg(long)]
        csv: PathBuf,
        /// Demand the full 89x74 measurement lattice.
        #[arg(long)]
        strict: bool,
        /// Output config path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Path, seeds: Option<u64>) -> Result<ExperimentConfig, LabError> {
    let text = read_text(path)?;
    let mut config = ExperimentConfig::from_json_str(&text)?;
    if let Some(n) = seeds {
        config.n_seeds = n;
        config.validate()?;
    }
    Ok(config)
}

fn cmd_run(config: &Path, seeds: Option<u64>, out: Option<PathBuf>) -> Result<(), LabError> {
    let config = load_config(config, seeds)?;
    let out = out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| LabError::Io(format!("{}: {e}", out.display())))?;
    let records = run_experiment(&config)?;

    let rows: Vec<_> = records.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_text(&out.join("records.csv"), &records_csv_string(&rows, config.dim()))?;
    write_text(&out.join("summary.csv"), &summary_csv_string(&aggregate(&records)))?;

    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    for rec in &failed {
        eprintln!(
            "seed {} aborted after {} iterations: {}",
            rec.seed,
            rec.rows.len(),
            rec.error.as_deref().unwrap_or("unknown")
        );
    }
    println!(
        "wrote {} and {} ({} seeds, {} failed)",
        out.join("records.csv").display(),
        out.join("summary.csv").display(),
        records.len(),
        failed.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(LabError::Numeric(format!("{} of {} seeds failed", failed.len(), records.len())))
    }
}

fn cmd_plot(summaries: &[PathBuf], metric: &str, out: &Path) -> Result<(), LabError> {
    let metric = PlotMetric::parse(metric)?;
    let mut series = Vec::new();
    for path in summaries {
        let rows = read_summary_csv(&read_text(path)?)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        series.push((name, rows));
    }
    write_text(out, &plot_svg(&series, metric)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_bound_check(config: &Path, out: &Path) -> Result<(), LabError> {
    let config = load_config(config, None)?;
    let records = run_experiment(&config)?;
    for rec in records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "seed {} aborted after {} iterations: {}",
            rec.seed,
            rec.rows.len(),
            rec.error.as_deref().unwrap_or("unknown")
        );
    }
    let report = bound_check(&records, &config)?;
    write_text(out, &bound_csv_string(&report))?;
    if report.misspecified {
        eprintln!("note: target is not a sample of the model prior; verdicts are caveats only");
    }
    println!("wrote {}", out.display());
    if records.iter().any(|r| r.error.is_some()) {
        return Err(LabError::Numeric("some seeds failed; see diagnostics above".into()));
    }
    Ok(())
}

fn cmd_ingest(csv: &Path, strict: bool, out: &Path) -> Result<(), LabError> {
    let config = ingest_lifetime_csv(&read_text(csv)?, strict)?;
    write_text(out, &config.to_json_string())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, seeds, out } => cmd_run(&config, seeds, out),
        Cmd::Plot { summary, metric, out } => cmd_plot(&summary, &metric, &out),
        Cmd::BoundCheck { config, out } => cmd_bound_check(&config, &out),
        Cmd::Ingest { csv, strict, out } => cmd_ingest(&csv, strict, &out),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
