//! Trace and summary persistence.
//!
//! A trace file is a CSV with `#`-prefixed header lines carrying the
//! metadata (config hash, seeds, equilibrium residual, constants) followed
//! by one row per iteration in a fixed column order:
//!
//! ```text
//! k,distance,weighted_distance,step_size,participants,max_regret,mean_regret,bound_margin,noise_sq_norm
//! ```
//!
//! Optional columns are left empty when the run did not record them.
//! Re-running the same config and seed reproduces a trace file byte for
//! byte except for the `created_unix` header line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::{SimulationTrace, TraceRow};
use crate::error::{Error, Result};
use crate::metrics::ConstantsBundle;

pub const TRACE_COLUMNS: &str =
    "k,distance,weighted_distance,step_size,participants,max_regret,mean_regret,bound_margin,noise_sq_norm";

/// Header block of a trace file.
#[derive(Debug, Clone)]
pub struct TraceMetadata {
    pub config_hash: String,
    pub master_seed: u64,
    pub replication: u64,
    pub equilibrium_residual: f64,
    pub constants: Option<ConstantsBundle>,
    /// Wall-clock write time; the one field excluded from reproducibility.
    pub created_unix: Option<u64>,
}

impl TraceMetadata {
    pub fn stamped(mut self) -> Self {
        self.created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        self
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// Writes one replication's trace.
pub fn write_trace_csv(path: &Path, metadata: &TraceMetadata, trace: &SimulationTrace) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# netgame trace v1").expect("string write");
    writeln!(out, "# config_hash={}", metadata.config_hash).expect("string write");
    writeln!(out, "# master_seed={}", metadata.master_seed).expect("string write");
    writeln!(out, "# replication={}", metadata.replication).expect("string write");
    writeln!(out, "# equilibrium_residual={}", metadata.equilibrium_residual)
        .expect("string write");
    if let Some(constants) = &metadata.constants {
        let json = serde_json::to_string(constants).expect("constants serialize");
        writeln!(out, "# constants={json}").expect("string write");
    }
    if let Some(ts) = metadata.created_unix {
        writeln!(out, "# created_unix={ts}").expect("string write");
    }
    writeln!(out, "{TRACE_COLUMNS}").expect("string write");
    for row in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.iteration,
            row.distance,
            row.weighted_distance,
            row.step_size,
            row.participants,
            opt(row.max_regret),
            opt(row.mean_regret),
            opt(row.bound_margin),
            opt(row.noise_sq_norm),
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_opt(field: &str, path: &Path, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| malformed(path, format!("bad {what} field {field:?}: {e}")))
}

fn malformed(path: &Path, reason: String) -> Error {
    Error::MalformedFile { path: path.display().to_string(), reason }
}

/// Reads a trace file back into its metadata and rows.
pub fn read_trace_csv(path: &Path) -> Result<(TraceMetadata, Vec<TraceRow>)> {
    let text = fs::read_to_string(path)?;
    let mut metadata = TraceMetadata {
        config_hash: String::new(),
        master_seed: 0,
        replication: 0,
        equilibrium_residual: f64::NAN,
        constants: None,
        created_unix: None,
    };
    let mut rows = Vec::new();
    let mut saw_columns = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some((key, value)) = rest.split_once('=') {
                match key {
                    "config_hash" => metadata.config_hash = value.to_string(),
                    "master_seed" => {
                        metadata.master_seed = value
                            .parse()
                            .map_err(|e| malformed(path, format!("bad master_seed: {e}")))?
                    }
                    "replication" => {
                        metadata.replication = value
                            .parse()
                            .map_err(|e| malformed(path, format!("bad replication: {e}")))?
                    }
                    "equilibrium_residual" => {
                        metadata.equilibrium_residual = value
                            .parse()
                            .map_err(|e| malformed(path, format!("bad residual: {e}")))?
                    }
                    "created_unix" => metadata.created_unix = value.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if line == TRACE_COLUMNS {
            saw_columns = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(malformed(path, format!("row has {} fields, expected 9", fields.len())));
        }
        rows.push(TraceRow {
            iteration: fields[0]
                .parse()
                .map_err(|e| malformed(path, format!("bad iteration: {e}")))?,
            distance: fields[1]
                .parse()
                .map_err(|e| malformed(path, format!("bad distance: {e}")))?,
            weighted_distance: fields[2]
                .parse()
                .map_err(|e| malformed(path, format!("bad weighted distance: {e}")))?,
            step_size: fields[3]
                .parse()
                .map_err(|e| malformed(path, format!("bad step size: {e}")))?,
            participants: fields[4]
                .parse()
                .map_err(|e| malformed(path, format!("bad participant count: {e}")))?,
            max_regret: parse_opt(fields[5], path, "max regret")?,
            mean_regret: parse_opt(fields[6], path, "mean regret")?,
            bound_margin: parse_opt(fields[7], path, "bound margin")?,
            noise_sq_norm: parse_opt(fields[8], path, "noise norm")?,
        });
    }
    if !saw_columns {
        return Err(malformed(path, "missing column header".into()));
    }
    let mut last = None;
    for row in &rows {
        if let Some(prev) = last {
            if row.iteration <= prev {
                return Err(malformed(path, format!("iterations not increasing at {}", row.iteration)));
            }
        }
        last = Some(row.iteration);
    }
    Ok((metadata, rows))
}

/// Per-replication digest stored in the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationDigest {
    pub replication: u64,
    pub final_distance: f64,
    pub initial_distance: f64,
    pub regret_bound_violations: u64,
    pub trace_file: String,
}

/// Machine-readable summary of one `run` invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub master_seed: u64,
    pub replications: u64,
    pub horizon: u64,
    pub equilibrium_residual: f64,
    pub equilibrium_iterations: u64,
    pub equilibrium_converged: bool,
    pub constants: ConstantsBundle,
    pub mean_final_distance: f64,
    pub max_final_distance: f64,
    pub total_regret_bound_violations: u64,
    pub per_replication: Vec<ReplicationDigest>,
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<()> {
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(path, json)?;
    Ok(())
}
