//! Benchmark harness: batch configuration, runners, Gset I/O and reports.

pub mod config;
pub mod gset;
pub mod report;
pub mod run;

pub use config::{BenchConfig, ConfigError, ProblemKind, SolverKind};
pub use report::{BenchReport, ReportRow};
pub use run::{run_batch, run_bench};

/// Row-major nested vectors, the on-disk form of a point.
pub fn matrix_to_rows(x: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<nalgebra::DMatrix<f64>, String> {
    let n = rows.len();
    let r = rows.first().map_or(0, Vec::len);
    if n == 0 || r == 0 {
        return Err("point is empty".into());
    }
    if let Some(i) = rows.iter().position(|row| row.len() != r) {
        return Err(format!("row {i} has {} entries, expected {r}", rows[i].len()));
    }
    Ok(nalgebra::DMatrix::from_fn(n, r, |i, j| rows[i][j]))
}
