//! Riemannian gradient descent with Barzilai–Borwein steps and a
//! nonmonotone backtracking safeguard; used as the comparison solver.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DMatrix;

use super::{feasible_start, Objective, SolveReport, SolverConfig, SolverError, Termination, TraceEntry};
use crate::linalg::inner;
use crate::manifold::Manifold;

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const STEP_MIN: f64 = 1e-10;
const STEP_MAX: f64 = 1e10;

pub fn solve_baseline_bb<P: Objective + ?Sized>(
    problem: &P,
    manifold: &Manifold,
    x0: &DMatrix<f64>,
    config: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    config.validate()?;
    let start = Instant::now();
    let mut x = feasible_start(manifold, x0)?;
    let (mut f, egrad) = problem.value_and_gradient(&x);
    let f_initial = f;
    let mut grad = manifold.proj_tangent_unchecked(&x, &egrad);
    let mut gnorm = grad.norm();
    let mut recent: VecDeque<f64> = VecDeque::from([f]);
    let mut alpha = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
    let mut trace = Vec::new();
    let mut iter = 0;

    let termination = loop {
        if gnorm < config.eps_grad {
            break Termination::Converged;
        }
        if !f.is_finite() || !gnorm.is_finite() {
            break Termination::Failure("non-finite objective or gradient".into());
        }
        if iter >= config.max_iters {
            break Termination::IterationLimit;
        }
        if start.elapsed().as_secs_f64() > config.time_limit {
            break Termination::TimeLimit;
        }
        let reference = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = alpha;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            if let Ok(y) = manifold.retract_unchecked(&x, &(&grad * -t)) {
                let (fy, egy) = problem.value_and_gradient(&y);
                if fy.is_finite() && fy <= reference - ARMIJO * t * gnorm * gnorm {
                    accepted = Some((y, fy, egy));
                    break;
                }
            }
            t *= 0.5;
        }
        iter += 1;
        let Some((y, fy, egy)) = accepted else {
            break Termination::RejectionLimit;
        };
        let grad_y = manifold.proj_tangent_unchecked(&y, &egy);
        let s = manifold.proj_tangent_unchecked(&y, &(&y - &x));
        let yv = &grad_y - manifold.proj_tangent_unchecked(&y, &grad);
        let sy = inner(&s, &yv);
        let next_norm = grad_y.norm();
        alpha = if sy > 0.0 {
            inner(&s, &s) / sy
        } else {
            1.0 / next_norm.max(f64::MIN_POSITIVE)
        };
        alpha = if alpha.is_finite() { alpha.clamp(STEP_MIN, STEP_MAX) } else { STEP_MAX };
        trace.push(TraceEntry {
            f: fy,
            grad_norm: next_norm,
            gamma: 1.0 / t,
            step_norm: t * gnorm,
            accepted: true,
            rho: f64::NAN,
        });
        x = y;
        f = fy;
        grad = grad_y;
        gnorm = next_norm;
        recent.push_back(f);
        if recent.len() > MEMORY {
            recent.pop_front();
        }
    };

    Ok(SolveReport {
        feasibility: manifold.feasibility_residual(&x),
        f,
        f_initial,
        grad_norm: gnorm,
        iterations: iter,
        wall_time: start.elapsed().as_secs_f64(),
        termination,
        trace,
        x,
    })
}
