//! Dimension-reduced cubic-regularized Riemannian optimization.
//!
//! The crate is organized around four pieces:
//!
//! * [`manifold`]: embedded submanifolds (Euclidean, row-oblique, Stiefel and
//!   products of sphere intersections) with projection, retraction, transport
//!   and Riemannian gradient/Hessian-vector products.
//! * [`cubic`]: global solver for small cubic-regularized quadratic models.
//! * [`solver`]: the subspace cubic-regularized iteration (exact-Hessian and
//!   finite-difference variants) and a Barzilai–Borwein gradient baseline.
//! * [`problems`]: low-rank max-cut, discretized 1D Kohn–Sham and sensor
//!   network localization, including instance generators and certificates.
//!
//! With the default `parallel` feature, row-independent kernels and batch
//! helpers in [`par`] run on rayon. Every parallel path is a map over
//! independent indices collected in order, so results are bitwise identical
//! to the sequential build.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubic;
pub mod linalg;
pub mod manifold;
pub mod par;
pub mod problems;
pub mod rng;
pub mod solver;

pub use cubic::{model_value, solve_cubic, CubicError, CubicSolution, ReducedModel};
pub use manifold::{GeometryError, Manifold};
pub use solver::{
    solve, solve_baseline_bb, Objective, SolveReport, SolverConfig, Termination, Variant,
};
