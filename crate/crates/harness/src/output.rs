//! Flat-file outputs: a JSON summary and CSV tables.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use semiretract::retraction::RetractionTrace;

use crate::commands::Outcome;
use crate::report::{RunReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// One row per iterate: `n, gap, residual, x_0, …`. `gap` is
/// `|x_{n+1} - x_n|` and is empty on the last row.
pub fn trace_csv(trace: &RetractionTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let d = trace.limit.len();
    let mut header = vec!["n".to_string(), "gap".into(), "residual".into()];
    header.extend((0..d).map(|i| format!("x_{i}")));
    w.write_record(&header).expect("write to memory");
    for (n, x) in trace.iterates.iter().enumerate() {
        let mut row = vec![
            n.to_string(),
            num(trace.gaps.get(n).copied()),
            num(trace.residuals.get(n).copied()),
        ];
        row.extend(x.iter().map(|c| format!("{c:e}")));
        w.write_record(&row).expect("write to memory");
    }
    finish(w)
}

pub fn criteria_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "status", "measured", "threshold", "description"])
        .expect("write to memory");
    for c in &report.criteria {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        };
        w.write_record([
            c.id.as_str(),
            status,
            &num(c.measured),
            &num(c.threshold),
            c.description.as_str(),
        ])
        .expect("write to memory");
    }
    finish(w)
}

pub fn weights_csv(weights: &[f64]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["slot", "weight"]).expect("write to memory");
    for (i, x) in weights.iter().enumerate() {
        w.write_record([i.to_string(), format!("{x:e}")]).expect("write to memory");
    }
    finish(w)
}

pub fn pairs_csv(pairs: &[(f64, f64)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d_xy", "d_rx_ry"]).expect("write to memory");
    for (a, b) in pairs {
        w.write_record([format!("{a:e}"), format!("{b:e}")]).expect("write to memory");
    }
    finish(w)
}

pub fn summary_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Writes the requested files into `dir` and returns their paths.
pub fn write_outputs(outcome: &Outcome, dir: &Path, format: Format) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if format.json() {
        files.push(("summary.json", summary_json(&outcome.report)));
    }
    if format.csv() {
        files.push(("criteria.csv", criteria_csv(&outcome.report)));
        if let Some(t) = &outcome.trace {
            files.push(("trace.csv", trace_csv(t)));
        }
        if let Some(w) = &outcome.mean_weights {
            files.push(("mean.csv", weights_csv(w)));
        }
        if let Some(p) = &outcome.holder_pairs {
            files.push(("holder_pairs.csv", pairs_csv(p)));
        }
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// `[PASS] id  measured <= threshold` lines for the terminal.
pub fn human_lines(report: &RunReport) -> Vec<String> {
    report
        .criteria
        .iter()
        .map(|c| {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let nums = match (c.measured, c.threshold) {
                (Some(m), Some(t)) => format!("  measured {m:.3e}, threshold {t:.3e}"),
                _ => String::new(),
            };
            let note = c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
            format!("[{tag}] {:<28} {}{nums}{note}", c.id, c.description)
        })
        .collect()
}
