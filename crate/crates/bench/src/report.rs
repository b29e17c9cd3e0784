//! Batch results and their JSON/CSV encodings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 9] = [
    "problem", "solver", "seed", "fval", "gradnorm", "pfeas", "metric", "iters", "seconds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub parallel: bool,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            parallel: rdrsom::par::is_parallel(),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

/// One `(seed, solver)` run. Numeric fields are `None` when the run failed
/// before producing them or when they are not finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    pub solver: String,
    pub seed: u64,
    pub fval: Option<f64>,
    pub gradnorm: Option<f64>,
    pub pfeas: Option<f64>,
    /// KKT residue for max-cut, RMSE for sensor localization.
    pub metric: Option<f64>,
    pub metric_name: Option<String>,
    pub iters: usize,
    pub seconds: f64,
    pub termination: String,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: u32,
    pub environment: Environment,
    pub config: BenchConfig,
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn new(config: &BenchConfig, rows: Vec<ReportRow>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            environment: Environment::current(),
            config: config.clone(),
            rows,
        }
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(ReportRow::failed)
    }

    /// Copy with every timing field zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            row.seconds = 0.0;
        }
        out
    }
}

pub fn emit_json(report: &BenchReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<BenchReport, serde_json::Error> {
    serde_json::from_str(text)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.solver.clone(),
            r.seed.to_string(),
            cell(r.fval),
            cell(r.gradnorm),
            cell(r.pfeas),
            cell(r.metric),
            r.iters.to_string(),
            r.seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}
