//! Global minimization of the small cubic-regularized model
//!
//! ```text
//! m(h) = ⟨g, h⟩ + ½⟨Qh, h⟩ + (γ/6)‖h‖³,   h ∈ R^m.
//! ```
//!
//! A global minimizer satisfies `(Q + sI) h = -g` with `s = γ‖h‖/2` and
//! `Q + sI ⪰ 0`. In the eigenbasis of `Q` this reduces to a scalar equation
//! in `s` on `[max(0, -λ_min), ∞)`, solved by safeguarded Newton. When `g`
//! has no component along the bottom eigenspace and the resulting step is too
//! short (the hard case), an eigenvector component is added instead.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Largest supported reduced dimension.
pub const MAX_DIM: usize = 64;
/// `|⟨g, u_min⟩| ≤ HARD_CASE_RTOL · ‖g‖` counts as orthogonal.
pub const HARD_CASE_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CubicError {
    #[error("model contains non-finite entries")]
    NonFinite,
    #[error("Q is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: g has {g} entries, Q is {q}×{q}")]
    Dimension { g: usize, q: usize },
    #[error("reduced dimension {0} exceeds the supported maximum")]
    TooLarge(usize),
    #[error("regularization weight must be positive and finite, got {0}")]
    BadGamma(f64),
}

/// Reduced gradient, symmetric reduced Hessian and regularization weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub g: DVector<f64>,
    pub q: DMatrix<f64>,
    pub gamma: f64,
}

impl ReducedModel {
    /// Builds a model, symmetrizing `q`.
    pub fn new(g: DVector<f64>, q: DMatrix<f64>, gamma: f64) -> Result<Self, CubicError> {
        let m = g.len();
        if q.nrows() != m || q.ncols() != m {
            return Err(CubicError::Dimension { g: m, q: q.nrows() });
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(CubicError::BadGamma(gamma));
        }
        let q = (&q + q.transpose()) * 0.5;
        Ok(Self { g, q, gamma })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSolution {
    pub h: DVector<f64>,
    /// `m(0) - m(h)` for the cubic model.
    pub model_decrease: f64,
    /// Decrease of the second-order part only, `-⟨g,h⟩ - ½⟨Qh,h⟩`. At a global
    /// minimizer this equals `-½⟨g,h⟩ + (γ/4)‖h‖³`.
    pub quadratic_decrease: f64,
    /// `s = γ‖h‖/2`.
    pub multiplier: f64,
    pub hard_case: bool,
}

/// `⟨g,h⟩ + ½⟨Qh,h⟩ + (γ/6)‖h‖³`.
pub fn model_value(model: &ReducedModel, h: &DVector<f64>) -> f64 {
    model.g.dot(h) + 0.5 * h.dot(&(&model.q * h)) + model.gamma / 6.0 * h.norm().powi(3)
}

/// Secular function pieces in the eigenbasis.
struct Secular<'a> {
    lam: &'a DVector<f64>,
    gt: &'a DVector<f64>,
    gamma: f64,
}

impl Secular<'_> {
    /// `(‖h(s)‖, d‖h‖/ds)` for `h(s) = -(Λ + sI)⁻¹ g̃`.
    fn norm_and_slope(&self, s: f64) -> (f64, f64) {
        let mut n2 = 0.0;
        let mut d = 0.0;
        for (l, g) in self.lam.iter().zip(self.gt.iter()) {
            let den = l + s;
            if *g == 0.0 {
                continue;
            }
            n2 += (g / den).powi(2);
            d += g * g / den.powi(3);
        }
        let n = n2.sqrt();
        (n, if n > 0.0 { -d / n } else { 0.0 })
    }

    fn phi(&self, s: f64) -> f64 {
        self.norm_and_slope(s).0 - 2.0 * s / self.gamma
    }
}

/// Solves the cubic model globally.
pub fn solve_cubic(model: &ReducedModel) -> Result<CubicSolution, CubicError> {
    let m = model.dim();
    if m > MAX_DIM {
        return Err(CubicError::TooLarge(m));
    }
    if model.q.nrows() != m || model.q.ncols() != m {
        return Err(CubicError::Dimension { g: m, q: model.q.nrows() });
    }
    if model.g.iter().chain(model.q.iter()).any(|v| !v.is_finite()) {
        return Err(CubicError::NonFinite);
    }
    if !(model.gamma.is_finite() && model.gamma > 0.0) {
        return Err(CubicError::BadGamma(model.gamma));
    }
    let asym = (&model.q - model.q.transpose()).amax();
    if asym > 0.0 {
        return Err(CubicError::NotSymmetric(asym));
    }
    if m == 0 {
        return Ok(finish(model, DVector::zeros(0), false));
    }

    let gamma = model.gamma;
    let gnorm = model.g.norm();
    let eig = model.q.clone().symmetric_eigen();
    let lam = eig.eigenvalues.clone();
    let u = eig.eigenvectors.clone();
    let mut gt = u.tr_mul(&model.g);
    let lmin = lam.iter().cloned().fold(f64::INFINITY, f64::min);
    let qscale = lam.amax().max(f64::MIN_POSITIVE);

    // Components of g on the bottom eigenspace.
    let bottom: Vec<usize> = (0..m)
        .filter(|&i| lam[i] - lmin <= 1e-12 * qscale)
        .collect();
    let bottom_norm = bottom.iter().map(|&i| gt[i] * gt[i]).sum::<f64>().sqrt();

    if gnorm == 0.0 && lmin >= 0.0 {
        return Ok(finish(model, DVector::zeros(m), false));
    }

    let s_low = if lmin < 0.0 { -lmin } else { 0.0 };

    if lmin < 0.0 && bottom_norm <= HARD_CASE_RTOL * gnorm {
        for &i in &bottom {
            gt[i] = 0.0;
        }
        let sec = Secular { lam: &lam, gt: &gt, gamma };
        let (base_norm, _) = sec.norm_and_slope(s_low);
        let target = 2.0 * s_low / gamma;
        if base_norm <= target {
            // Hard case: interior step is too short, pad with u_min.
            let mut ht = DVector::zeros(m);
            for i in 0..m {
                if !bottom.contains(&i) {
                    ht[i] = -gt[i] / (lam[i] + s_low);
                }
            }
            let tau = (target * target - base_norm * base_norm).max(0.0).sqrt();
            ht[bottom[0]] = tau;
            let h = &u * ht;
            return Ok(finish(model, h, true));
        }
        let s = secular_root(&sec, s_low, gnorm);
        return Ok(finish(model, step_at(&u, &lam, &gt, s), false));
    }

    let sec = Secular { lam: &lam, gt: &gt, gamma };
    let s = secular_root(&sec, s_low, gnorm);
    Ok(finish(model, step_at(&u, &lam, &gt, s), false))
}

fn step_at(u: &DMatrix<f64>, lam: &DVector<f64>, gt: &DVector<f64>, s: f64) -> DVector<f64> {
    let ht = DVector::from_fn(lam.len(), |i, _| if gt[i] == 0.0 { 0.0 } else { -gt[i] / (lam[i] + s) });
    u * ht
}

/// Root of `φ(s) = ‖h(s)‖ - 2s/γ` on `(s_low, ∞)`; `φ` is strictly decreasing there.
fn secular_root(sec: &Secular<'_>, s_low: f64, gnorm: f64) -> f64 {
    let tol = 1e-14 * (1.0 + gnorm);
    let mut lo = s_low;
    let mut hi = s_low.max(1e-300) * 2.0 + 1.0;
    while sec.phi(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // Start from the upper end, where Newton approaches monotonically.
    let mut s = hi;
    for _ in 0..500 {
        let (norm, slope) = sec.norm_and_slope(s);
        let phi = norm - 2.0 * s / sec.gamma;
        if phi.abs() <= tol {
            return s;
        }
        if phi > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return s;
        }
        let dphi = slope - 2.0 / sec.gamma;
        let newton = s - phi / dphi;
        s = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    s
}

fn finish(model: &ReducedModel, h: DVector<f64>, hard_case: bool) -> CubicSolution {
    let hnorm = h.norm();
    let gh = model.g.dot(&h);
    let hqh = h.dot(&(&model.q * &h));
    let quadratic_decrease = -gh - 0.5 * hqh;
    let model_decrease = quadratic_decrease - model.gamma / 6.0 * hnorm.powi(3);
    CubicSolution {
        h,
        model_decrease,
        quadratic_decrease,
        multiplier: model.gamma * hnorm / 2.0,
        hard_case,
    }
}

/// `‖g + Qh + s h‖` with `s = γ‖h‖/2`, and the scale it is judged against.
pub fn stationarity_residual(model: &ReducedModel, sol: &CubicSolution) -> (f64, f64) {
    let s = sol.multiplier;
    let res = (&model.g + &model.q * &sol.h + &sol.h * s).norm();
    let hn = sol.h.norm();
    let scale = model.g.norm() + model.q.norm() * hn + s * hn + 1e-30;
    (res, scale)
}
