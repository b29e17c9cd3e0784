//! Discretized 1D Kohn–Sham energy on the Stiefel manifold.

use nalgebra::DMatrix;

use super::ProblemError;
use crate::linalg::Tridiagonal;
use crate::manifold::{row_dots, Manifold};
use crate::solver::Objective;

/// `f(R) = ½ tr(RᵀLR) + (α/4) ρᵀ L⁻¹ ρ` with `ρ = diag(RRᵀ)` and `L` the
/// Dirichlet second-difference matrix `tridiag(-1, 2, -1)`.
#[derive(Debug, Clone)]
pub struct KsInstance {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    lap: Tridiagonal,
}

impl KsInstance {
    pub fn new(n: usize, p: usize, alpha: f64) -> Result<Self, ProblemError> {
        if p == 0 || p > n {
            return Err(ProblemError::Invalid(format!("need 1 <= p <= n, got n = {n}, p = {p}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ProblemError::Invalid(format!("alpha must be finite and nonnegative, got {alpha}")));
        }
        Ok(Self {
            n,
            p,
            alpha,
            lap: Tridiagonal::laplacian_1d(n),
        })
    }

    pub fn manifold(&self) -> Manifold {
        Manifold::Stiefel { n: self.n, r: self.p }
    }

    pub fn laplacian(&self) -> &Tridiagonal {
        &self.lap
    }

    /// Hartree potential `w = L⁻¹ ρ`.
    pub fn potential(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.lap.solve(&row_dots(x, x))
    }
}

fn scale_rows(w: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| w[i] * x[(i, j)])
}

impl Objective for KsInstance {
    fn value_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let rho = row_dots(x, x);
        let w = self.lap.solve(&rho);
        let lx = self.lap.mul_mat(x);
        let hartree: f64 = rho.iter().zip(&w).map(|(a, b)| a * b).sum();
        let f = 0.5 * lx.dot(x) + 0.25 * self.alpha * hartree;
        let g = lx + scale_rows(&w, x) * self.alpha;
        (f, g)
    }

    fn hessian_vector(&self, x: &DMatrix<f64>, h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        let w = self.potential(x);
        let drho: Vec<f64> = row_dots(x, h).into_iter().map(|v| 2.0 * v).collect();
        let dw = self.lap.solve(&drho);
        let out = self.lap.mul_mat(h) + (scale_rows(&w, h) + scale_rows(&dw, x)) * self.alpha;
        Some(out)
    }
}
