//! Benchmark problems: objectives, gradients, instance generators and
//! certificates.

pub mod kohn_sham;
pub mod maxcut;
pub mod snl;

use thiserror::Error;

use crate::manifold::GeometryError;
use crate::solver::SolverError;

pub use kohn_sham::KsInstance;
pub use maxcut::{maxcut_kkt, KktResidue, MaxcutInstance, SparseSymmetric};
pub use snl::{snl_generate, snl_manifold, snl_rmse, snl_warmstart, SnlInstance, SnlObjective};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("n = {n} exceeds the dense eigendecomposition cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("row {row}: {source}")]
    Row { row: usize, source: GeometryError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
