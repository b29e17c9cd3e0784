//! Subspace cubic-regularized Riemannian iteration.
//!
//! Each step restricts the second-order model of `f` at `x_k` to a small
//! subspace of the tangent space (the gradient plus recent displacements),
//! minimizes the cubic-regularized model there, and retracts. The
//! regularization weight `γ_k` is adapted from the ratio of actual to
//! predicted decrease; steps with a poor ratio are rejected.

mod baseline;
pub mod subspace;

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubic::{self, CubicError};
use crate::manifold::{GeometryError, Manifold, FEASIBILITY_TOL};
pub use baseline::solve_baseline_bb;
pub use subspace::{build_subspace, reduced_model_exact, reduced_model_fd, SubspaceBasis};

/// Objective with a Euclidean gradient and, optionally, Hessian-vector products.
pub trait Objective: Sync {
    fn value(&self, x: &DMatrix<f64>) -> f64 {
        self.value_and_gradient(x).0
    }

    fn value_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>);

    /// Euclidean Hessian of `f` at `x` applied to `h`.
    fn hessian_vector(&self, _x: &DMatrix<f64>, _h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Cubic(#[from] CubicError),
    #[error("gradient is zero; the iteration should already have stopped")]
    ZeroGradient,
    #[error("the objective does not provide Hessian-vector products")]
    HessianUnavailable,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    ExactHessian,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Stop once `‖grad f‖ < eps_grad`.
    pub eps_grad: f64,
    pub gamma_init: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Number of past iterates contributing subspace directions.
    pub history_depth: usize,
    pub fd_eta: f64,
    pub max_iters: usize,
    pub variant: Variant,
    pub accept_lo: f64,
    pub accept_hi: f64,
    pub gamma_up: f64,
    pub gamma_down: f64,
    /// Recorded with results; the iteration itself draws no random numbers.
    pub rng_seed: u64,
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    pub max_consecutive_rejections: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_grad: 1e-4,
            gamma_init: 1.0,
            gamma_min: 1e-8,
            gamma_max: 1e12,
            history_depth: 1,
            fd_eta: 1e-7,
            max_iters: 10_000,
            variant: Variant::FiniteDifference,
            accept_lo: 0.1,
            accept_hi: 0.75,
            gamma_up: 4.0,
            gamma_down: 0.5,
            rng_seed: 0,
            time_limit: 3600.0,
            max_consecutive_rejections: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::InvalidConfig(msg.to_string()));
        if !(self.eps_grad > 0.0) {
            return bad("eps_grad must be positive");
        }
        if !(self.gamma_min > 0.0 && self.gamma_min <= self.gamma_init && self.gamma_init <= self.gamma_max) {
            return bad("require 0 < gamma_min <= gamma_init <= gamma_max");
        }
        if !self.gamma_max.is_finite() {
            return bad("gamma_max must be finite");
        }
        if self.history_depth == 0 {
            return bad("history_depth must be at least 1");
        }
        if !(self.fd_eta > 0.0) {
            return bad("fd_eta must be positive");
        }
        if !(self.accept_lo < self.accept_hi) {
            return bad("accept_lo must be below accept_hi");
        }
        if !(self.gamma_up > 1.0 && self.gamma_down > 0.0 && self.gamma_down < 1.0) {
            return bad("require gamma_up > 1 and 0 < gamma_down < 1");
        }
        if !(self.time_limit > 0.0) {
            return bad("time_limit must be positive");
        }
        Ok(())
    }
}

/// A previous accepted iterate and its Riemannian gradient.
#[derive(Debug, Clone)]
pub struct HistoryEntry {
    pub x: DMatrix<f64>,
    pub grad: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct IterationState {
    pub x: DMatrix<f64>,
    pub f: f64,
    pub egrad: DMatrix<f64>,
    pub grad: DMatrix<f64>,
    pub grad_norm: f64,
    pub gamma: f64,
    /// Most recent first.
    pub history: VecDeque<HistoryEntry>,
    pub iter: usize,
}

impl IterationState {
    pub fn new<P: Objective + ?Sized>(problem: &P, manifold: &Manifold, x: DMatrix<f64>, gamma: f64) -> Self {
        let (f, egrad) = problem.value_and_gradient(&x);
        let grad = manifold.proj_tangent_unchecked(&x, &egrad);
        let grad_norm = grad.norm();
        Self {
            x,
            f,
            egrad,
            grad,
            grad_norm,
            gamma,
            history: VecDeque::new(),
            iter: 0,
        }
    }
}

/// What happened in one call to [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub rho: f64,
    pub step_norm: f64,
    /// Cubic-model decrease `m(0) - m(h)`.
    pub model_decrease: f64,
    /// Second-order model decrease; bounded below by `(γ/4)‖d‖³`.
    pub quadratic_decrease: f64,
    /// `γ` the step was computed with.
    pub gamma: f64,
    pub subspace_dim: usize,
    pub gradient_in_span: f64,
}

/// One iteration: subspace, reduced model, cubic step, ratio test, `γ` update.
pub fn step<P: Objective + ?Sized>(
    problem: &P,
    manifold: &Manifold,
    state: &mut IterationState,
    config: &SolverConfig,
) -> Result<StepOutcome, SolverError> {
    let basis = build_subspace(manifold, state, config.history_depth)?;
    let model = match config.variant {
        Variant::ExactHessian => reduced_model_exact(problem, manifold, state, &basis)?,
        Variant::FiniteDifference => reduced_model_fd(problem, manifold, state, &basis, config.fd_eta)?.model,
    };
    let sol = cubic::solve_cubic(&model)?;
    let d = basis.combine(&sol.h);
    let gradient_in_span = (basis.project(&state.grad) - &state.grad).norm() / state.grad_norm;
    let gamma_used = state.gamma;

    let mut outcome = StepOutcome {
        accepted: false,
        rho: f64::NAN,
        step_norm: d.norm(),
        model_decrease: sol.model_decrease,
        quadratic_decrease: sol.quadratic_decrease,
        gamma: gamma_used,
        subspace_dim: basis.dim(),
        gradient_in_span,
    };

    let candidate = if sol.model_decrease > 0.0 {
        manifold.retract_unchecked(&state.x, &d).ok()
    } else {
        None
    };
    if let Some(x_new) = candidate {
        let (f_new, egrad_new) = problem.value_and_gradient(&x_new);
        let rho = (state.f - f_new) / sol.model_decrease;
        outcome.rho = rho;
        if f_new.is_finite() && rho >= config.accept_lo {
            outcome.accepted = true;
            let grad_new = manifold.proj_tangent_unchecked(&x_new, &egrad_new);
            let old_x = std::mem::replace(&mut state.x, x_new);
            let old_grad = std::mem::replace(&mut state.grad, grad_new);
            state.history.push_front(HistoryEntry { x: old_x, grad: old_grad });
            state.history.truncate(config.history_depth);
            state.f = f_new;
            state.egrad = egrad_new;
            state.grad_norm = state.grad.norm();
        }
    }

    let rho = outcome.rho;
    if !outcome.accepted || !(rho >= config.accept_lo) {
        state.gamma = (state.gamma * config.gamma_up).min(config.gamma_max);
    } else if rho > config.accept_hi {
        state.gamma = (state.gamma * config.gamma_down).max(config.gamma_min);
    }
    state.iter += 1;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationLimit,
    TimeLimit,
    RejectionLimit,
    Failure(String),
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::IterationLimit => write!(f, "iteration limit"),
            Termination::TimeLimit => write!(f, "time limit"),
            Termination::RejectionLimit => write!(f, "rejection limit"),
            Termination::Failure(msg) => write!(f, "failure: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Objective after the step (unchanged when rejected).
    pub f: f64,
    pub grad_norm: f64,
    pub gamma: f64,
    pub step_norm: f64,
    pub accepted: bool,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: DMatrix<f64>,
    pub f: f64,
    /// Objective at the (projected) starting point.
    pub f_initial: f64,
    pub grad_norm: f64,
    pub feasibility: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub termination: Termination,
    pub trace: Vec<TraceEntry>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Projects `x0` onto the manifold if it is not already feasible.
pub(crate) fn feasible_start(manifold: &Manifold, x0: &DMatrix<f64>) -> Result<DMatrix<f64>, SolverError> {
    if x0.shape() != manifold.shape() {
        return Err(GeometryError::ShapeMismatch {
            expected: manifold.shape(),
            found: x0.shape(),
        }
        .into());
    }
    if manifold.feasibility_residual(x0) <= FEASIBILITY_TOL {
        Ok(x0.clone())
    } else {
        Ok(manifold.project_point(x0)?)
    }
}

/// Runs the iteration from `x0` until the gradient tolerance, the iteration
/// or time budget, or the consecutive-rejection limit is hit.
pub fn solve<P: Objective + ?Sized>(
    problem: &P,
    manifold: &Manifold,
    x0: &DMatrix<f64>,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    config.validate()?;
    let start = Instant::now();
    let x0 = feasible_start(manifold, x0)?;
    let mut state = IterationState::new(problem, manifold, x0, config.gamma_init);
    let f_initial = state.f;
    let mut trace = Vec::new();
    let mut rejections = 0;

    let termination = loop {
        if state.grad_norm < config.eps_grad {
            break Termination::Converged;
        }
        if !state.f.is_finite() || !state.grad_norm.is_finite() {
            break Termination::Failure("non-finite objective or gradient".into());
        }
        if state.iter >= config.max_iters {
            break Termination::IterationLimit;
        }
        if start.elapsed().as_secs_f64() > config.time_limit {
            break Termination::TimeLimit;
        }
        if rejections >= config.max_consecutive_rejections {
            break Termination::RejectionLimit;
        }
        match step(problem, manifold, &mut state, config) {
            Ok(out) => {
                rejections = if out.accepted { 0 } else { rejections + 1 };
                trace.push(TraceEntry {
                    f: state.f,
                    grad_norm: state.grad_norm,
                    gamma: out.gamma,
                    step_norm: out.step_norm,
                    accepted: out.accepted,
                    rho: out.rho,
                });
            }
            Err(e) => break Termination::Failure(e.to_string()),
        }
    };

    Ok(SolveReport {
        feasibility: manifold.feasibility_residual(&state.x),
        f: state.f,
        f_initial,
        grad_norm: state.grad_norm,
        iterations: state.iter,
        wall_time: start.elapsed().as_secs_f64(),
        termination,
        trace,
        x: state.x,
    })
}
