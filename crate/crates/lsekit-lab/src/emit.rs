//! CSV and SVG artifact emission, plus the matching loaders.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write-then-read cycle reproduces every value bit-for-bit (NaN appears as
//! `NaN`). All output is deterministic: no timestamps, no map iteration.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::LabError;
use crate::report::{BoundReport, MetricStats, SummaryRow};
use crate::runner::IterRow;

/// Writes `text` to `path`, reporting failures with the path.
pub fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    std::fs::write(path, text).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

/// Reads `path` as UTF-8 text, reporting failures with the path.
pub fn read_text(path: &Path) -> Result<String, LabError> {
    std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

fn records_header(dim: usize) -> String {
    let mut h = String::from("seed,t");
    for i in 1..=dim {
        let _ = write!(h, ",x{i}");
    }
    h.push_str(",y,beta,r_t,R_t,max_loss,precision,recall,fscore,wall_ms");
    h
}

/// Renders per-iteration rows as CSV with one `x` column per dimension.
pub fn records_csv_string(rows: &[IterRow], dim: usize) -> String {
    let mut out = records_header(dim);
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{},{}", row.seed, row.t);
        for c in &row.x {
            let _ = write!(out, ",{c}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{},{},{}",
            row.y,
            row.beta,
            row.r_t,
            row.big_r,
            row.max_loss,
            row.precision,
            row.recall,
            row.fscore,
            row.wall_ms
        );
    }
    out
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64, LabError> {
    field.trim().parse::<f64>().map_err(|_| {
        LabError::Config(format!("row {line_no}: `{field}` is not a number"))
    })
}

fn parse_u64(field: &str, line_no: usize) -> Result<u64, LabError> {
    field.trim().parse::<u64>().map_err(|_| {
        LabError::Config(format!("row {line_no}: `{field}` is not a nonnegative integer"))
    })
}

/// Parses a records CSV back into rows, returning the dimension implied by
/// the header and the rows in file order.
pub fn read_records_csv(text: &str) -> Result<(usize, Vec<IterRow>), LabError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines
        .next()
        .ok_or_else(|| LabError::Config("records CSV is empty".into()))?;
    let cols = header.split(',').count();
    if cols < 12 {
        return Err(LabError::Config(format!("records header has {cols} columns, expected at least 12")));
    }
    let dim = cols - 11;
    if header != records_header(dim) {
        return Err(LabError::Config("records header does not match the expected schema".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(LabError::Config(format!(
                "row {line_no}: {} fields, expected {cols}",
                fields.len()
            )));
        }
        let mut x = Vec::with_capacity(dim);
        for f in &fields[2..2 + dim] {
            x.push(parse_f64(f, line_no)?);
        }
        let rest: Vec<f64> = fields[2 + dim..]
            .iter()
            .map(|f| parse_f64(f, line_no))
            .collect::<Result<_, _>>()?;
        rows.push(IterRow {
            seed: parse_u64(fields[0], line_no)?,
            t: parse_u64(fields[1], line_no)?,
            x,
            y: rest[0],
            beta: rest[1],
            r_t: rest[2],
            big_r: rest[3],
            max_loss: rest[4],
            precision: rest[5],
            recall: rest[6],
            fscore: rest[7],
            wall_ms: rest[8],
        });
    }
    Ok((dim, rows))
}

const SUMMARY_HEADER: &str = "t,r_t_mean,r_t_se,r_t_err6,fscore_mean,fscore_se,fscore_err6,\
max_loss_mean,max_loss_se,max_loss_err6";

/// Renders a cross-seed summary as CSV: one column for the iteration and
/// three (mean, standard error, six-SE band) per metric.
pub fn summary_csv_string(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.r_t.mean,
            r.r_t.se,
            r.r_t.err6,
            r.fscore.mean,
            r.fscore.se,
            r.fscore.err6,
            r.max_loss.mean,
            r.max_loss.se,
            r.max_loss.err6
        );
    }
    out
}

/// Parses a summary CSV produced by [`summary_csv_string`].
pub fn read_summary_csv(text: &str) -> Result<Vec<SummaryRow>, LabError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines
        .next()
        .ok_or_else(|| LabError::Config("summary CSV is empty".into()))?;
    if header != SUMMARY_HEADER {
        return Err(LabError::Config("summary header does not match the expected schema".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(LabError::Config(format!(
                "row {line_no}: {} fields, expected 10",
                fields.len()
            )));
        }
        let v: Vec<f64> =
            fields[1..].iter().map(|f| parse_f64(f, line_no)).collect::<Result<_, _>>()?;
        rows.push(SummaryRow {
            t: parse_u64(fields[0], line_no)?,
            r_t: MetricStats { mean: v[0], se: v[1], err6: v[2] },
            fscore: MetricStats { mean: v[3], se: v[4], err6: v[5] },
            max_loss: MetricStats { mean: v[6], se: v[7], err6: v[8] },
        });
    }
    Ok(rows)
}

/// Renders a bound-check report as CSV. Rows carry PASS/FAIL verdicts, or
/// CAVEAT throughout when the model is misspecified and the bounds carry no
/// guarantee.
pub fn bound_csv_string(report: &BoundReport) -> String {
    let mut out = String::from(
        "t,gamma_hat,observed_cumulative,bound_cumulative,observed_rate,bound_rate,verdict\n",
    );
    for r in &report.rows {
        let verdict = if report.misspecified {
            "CAVEAT"
        } else if r.pass {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{verdict}",
            r.t,
            r.gamma_hat,
            r.observed_cumulative,
            r.bound_cumulative,
            r.observed_rate,
            r.bound_rate
        );
    }
    out
}

/// Which summary column a plot draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotMetric {
    /// Average misclassification loss.
    Rt,
    /// Super-level-set F-score.
    Fscore,
    /// Maximum pointwise loss.
    MaxLoss,
}

impl PlotMetric {
    /// Parses a metric name, listing the available names on failure.
    pub fn parse(name: &str) -> Result<Self, LabError> {
        match name {
            "r_t" => Ok(PlotMetric::Rt),
            "fscore" => Ok(PlotMetric::Fscore),
            "max_loss" => Ok(PlotMetric::MaxLoss),
            other => Err(LabError::Config(format!(
                "unknown metric `{other}`; available metrics: r_t, fscore, max_loss"
            ))),
        }
    }

    fn pick(self, row: &SummaryRow) -> MetricStats {
        match self {
            PlotMetric::Rt => row.r_t,
            PlotMetric::Fscore => row.fscore,
            PlotMetric::MaxLoss => row.max_loss,
        }
    }

    fn label(self) -> &'static str {
        match self {
            PlotMetric::Rt => "r_t",
            PlotMetric::Fscore => "fscore",
            PlotMetric::MaxLoss => "max_loss",
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 500.0;
const PLOT_L: f64 = 80.0;
const PLOT_R: f64 = 770.0;
const PLOT_T: f64 = 30.0;
const PLOT_B: f64 = 440.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws one metric of one or more summaries as an SVG line plot with
/// error bars spanning plus or minus six standard errors. Output bytes
/// depend only on the input.
pub fn plot_svg(series: &[(String, Vec<SummaryRow>)], metric: PlotMetric) -> Result<String, LabError> {
    let mut points: Vec<Vec<(f64, f64, f64)>> = Vec::new();
    for (_, rows) in series {
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .map(|r| (r.t as f64, metric.pick(r).mean, metric.pick(r).err6))
            .filter(|(_, m, _)| m.is_finite())
            .collect();
        points.push(pts);
    }
    if points.iter().all(|p| p.is_empty()) {
        return Err(LabError::Config("plot needs a nonempty summary".into()));
    }

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for pts in &points {
        for &(t, m, e) in pts {
            x_min = x_min.min(t);
            x_max = x_max.max(t);
            let e = if e.is_finite() { e } else { 0.0 };
            y_min = y_min.min(m - e);
            y_max = y_max.max(m + e);
        }
    }
    if x_min == x_max {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    } else {
        let pad = 0.05 * (y_max - y_min);
        y_min -= pad;
        y_max += pad;
    }
    let sx = |t: f64| PLOT_L + (t - x_min) / (x_max - x_min) * (PLOT_R - PLOT_L);
    let sy = |v: f64| PLOT_B - (v - y_min) / (y_max - y_min) * (PLOT_B - PLOT_T);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    let _ = writeln!(out, "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        out,
        "<line x1=\"{PLOT_L}\" y1=\"{PLOT_B}\" x2=\"{PLOT_R}\" y2=\"{PLOT_B}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{PLOT_L}\" y1=\"{PLOT_T}\" x2=\"{PLOT_L}\" y2=\"{PLOT_B}\" stroke=\"black\"/>"
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let tx = x_min + f * (x_max - x_min);
        let ty = y_min + f * (y_max - y_min);
        let px = sx(tx);
        let py = sy(ty);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.3}\" y1=\"{PLOT_B}\" x2=\"{px:.3}\" y2=\"{:.3}\" stroke=\"black\"/>",
            PLOT_B + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.3}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"middle\">{tx:.3}</text>",
            PLOT_B + 20.0
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.3}\" y1=\"{py:.3}\" x2=\"{PLOT_L}\" y2=\"{py:.3}\" stroke=\"black\"/>",
            PLOT_L - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\" text-anchor=\"end\">{ty:.3}</text>",
            PLOT_L - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"14\" text-anchor=\"middle\">iteration</text>",
        (PLOT_L + PLOT_R) / 2.0,
        PLOT_B + 40.0
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{:.3}\" font-size=\"14\" text-anchor=\"middle\" \
transform=\"rotate(-90 20 {:.3})\">{}</text>",
        (PLOT_T + PLOT_B) / 2.0,
        (PLOT_T + PLOT_B) / 2.0,
        metric.label()
    );

    // Series: error bars under the line, then the polyline.
    for (si, pts) in points.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for &(t, m, e) in pts {
            if !e.is_finite() || e <= 0.0 {
                continue;
            }
            let px = sx(t);
            let y0 = sy(m - e);
            let y1 = sy(m + e);
            let _ = writeln!(
                out,
                "<line x1=\"{px:.3}\" y1=\"{y0:.3}\" x2=\"{px:.3}\" y2=\"{y1:.3}\" \
stroke=\"{color}\" stroke-width=\"1\"/>"
            );
            for y in [y0, y1] {
                let _ = writeln!(
                    out,
                    "<line x1=\"{:.3}\" y1=\"{y:.3}\" x2=\"{:.3}\" y2=\"{y:.3}\" \
stroke=\"{color}\" stroke-width=\"1\"/>",
                    px - 3.0,
                    px + 3.0
                );
            }
        }
        if !pts.is_empty() {
            let mut path = String::new();
            for &(t, m, _) in pts {
                let _ = write!(path, "{:.3},{:.3} ", sx(t), sy(m));
            }
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                path.trim_end()
            );
        }
    }

    // Legend, one entry per series.
    for (si, (name, _)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let y = PLOT_T + 14.0 + 18.0 * si as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{:.3}\" y1=\"{y:.3}\" x2=\"{:.3}\" y2=\"{y:.3}\" stroke=\"{color}\" \
stroke-width=\"2\"/>",
            PLOT_R - 180.0,
            PLOT_R - 150.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">{}</text>",
            PLOT_R - 144.0,
            y + 4.0,
            xml_escape(name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
