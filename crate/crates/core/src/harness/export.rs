//! Result files.
//!
//! Floats in CSV are written as `{:.16e}` (17 significant digits, exact
//! round-trip); `inf`/`NaN` are spelled the way Rust parses them back. JSON
//! numbers use the shortest round-trip representation, with non-finite
//! values written as the strings `"inf"`, `"-inf"`, `"NaN"`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{BenchmarkSummary, ExperimentConfig, RunRecord};
use crate::error::{Error, Result};

pub const RUN_COLUMNS: [&str; 9] = [
    "start_index",
    "function",
    "optimizer",
    "line_search",
    "dim",
    "seed",
    "iterations_used",
    "final_loss",
    "fallback_count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn json_float(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(v.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn run_fields(r: &RunRecord, config: &ExperimentConfig) -> [String; 9] {
    [
        r.start_index.to_string(),
        config.function_name.clone(),
        config.optimizer.to_string(),
        config.line_search.to_string(),
        config.dim.to_string(),
        config.seed.to_string(),
        r.iterations_used.to_string(),
        format_float(r.final_loss),
        r.diagnostics.fallback_count().to_string(),
    ]
}

/// One row (or JSON object) per run, in the given order.
pub fn export_runs(records: &[RunRecord], config: &ExperimentConfig, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
            w.write_record(RUN_COLUMNS).map_err(csv_err(path))?;
            for r in records {
                w.write_record(run_fields(r, config)).map_err(csv_err(path))?;
            }
            w.flush().map_err(io_err(path))
        }
        Format::JsonLines => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            for r in records {
                let obj = json!({
                    "start_index": r.start_index,
                    "function": config.function_name,
                    "optimizer": config.optimizer,
                    "line_search": config.line_search,
                    "dim": config.dim,
                    "seed": config.seed,
                    "iterations_used": r.iterations_used,
                    "final_loss": json_float(r.final_loss),
                    "fallback_count": r.diagnostics.fallback_count(),
                });
                writeln!(w, "{obj}").map_err(io_err(path))?;
            }
            w.flush().map_err(io_err(path))
        }
    }
}

/// `step, loss, x_0, …, x_{d-1}` per recorded position.
pub fn export_trajectory(record: &RunRecord, path: &Path) -> Result<()> {
    let traj = record
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("run has no recorded trajectory".into()))?;
    let d = record.start_point.len();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["step".to_string(), "loss".to_string()];
    header.extend((0..d).map(|i| format!("x_{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (step, (x, loss)) in traj.iter().zip(&record.losses).enumerate() {
        let mut row = vec![step.to_string(), format_float(*loss)];
        row.extend(x.iter().map(|v| format_float(*v)));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn summary_value(s: &BenchmarkSummary) -> Value {
    json!({
        "function": s.function,
        "optimizer": s.optimizer,
        "line_search": s.line_search,
        "dim": s.dim,
        "n_starts": s.n_starts,
        "median": json_float(s.median),
        "best": json_float(s.best),
        "worst": json_float(s.worst),
        "success_rate": json_float(s.success_rate),
        "failed_runs": s.failed_runs,
        "sorted_final_losses": s.sorted_final_losses.iter().map(|&v| json_float(v)).collect::<Vec<_>>(),
    })
}

/// All summaries as one pretty-printed JSON array.
pub fn export_summaries_json(summaries: &[BenchmarkSummary], path: &Path) -> Result<()> {
    let doc = Value::Array(summaries.iter().map(summary_value).collect());
    let text = serde_json::to_string_pretty(&doc).expect("in-memory JSON");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// One row per summary: function, optimizer, line_search, dim, n_starts,
/// median, best, worst, success_rate, failed_runs.
pub fn export_summaries_csv(summaries: &[BenchmarkSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "function",
        "optimizer",
        "line_search",
        "dim",
        "n_starts",
        "median",
        "best",
        "worst",
        "success_rate",
        "failed_runs",
    ])
    .map_err(csv_err(path))?;
    for s in summaries {
        w.write_record([
            s.function.clone(),
            s.optimizer.to_string(),
            s.line_search.to_string(),
            s.dim.to_string(),
            s.n_starts.to_string(),
            format_float(s.median),
            format_float(s.best),
            format_float(s.worst),
            format_float(s.success_rate),
            s.failed_runs.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// A parsed row of a runs CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub start_index: usize,
    pub function: String,
    pub optimizer: String,
    pub line_search: bool,
    pub dim: usize,
    pub seed: u64,
    pub iterations_used: usize,
    pub final_loss: f64,
    pub fallback_count: u64,
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let bad = |what: &str| Error::InvalidConfig(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        if rec.len() != RUN_COLUMNS.len() {
            return Err(bad("row width"));
        }
        out.push(RunRow {
            start_index: rec[0].parse().map_err(|_| bad("start_index"))?,
            function: rec[1].to_string(),
            optimizer: rec[2].to_string(),
            line_search: rec[3].parse().map_err(|_| bad("line_search"))?,
            dim: rec[4].parse().map_err(|_| bad("dim"))?,
            seed: rec[5].parse().map_err(|_| bad("seed"))?,
            iterations_used: rec[6].parse().map_err(|_| bad("iterations_used"))?,
            final_loss: rec[7].parse().map_err(|_| bad("final_loss"))?,
            fallback_count: rec[8].parse().map_err(|_| bad("fallback_count"))?,
        });
    }
    Ok(out)
}

/// `runs_<function>_<optimizer>_<ls|nols>.csv`
pub fn runs_file_name(config: &ExperimentConfig) -> String {
    format!(
        "runs_{}_{}_{}.csv",
        config.function_name,
        config.optimizer,
        if config.line_search { "ls" } else { "nols" }
    )
}

/// `trajectory_<function>_<optimizer>.csv`
pub fn trajectory_file_name(function: &str, optimizer: &str) -> String {
    format!("trajectory_{function}_{optimizer}.csv")
}

pub fn ensure_dir(path: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(path).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}
