//! Subspace construction and reduced-model assembly.

use nalgebra::{DMatrix, DVector};

use super::{IterationState, Objective, SolverError};
use crate::cubic::ReducedModel;
use crate::linalg::{axpy, inner};
use crate::manifold::Manifold;

/// A candidate generator is dropped when its residual after orthogonalization
/// falls below this fraction of its original norm.
pub const DROP_RTOL: f64 = 1e-10;

/// Orthonormal basis of the search subspace at the current iterate.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// Orthonormal tangent vectors `v_1..v_m`.
    pub vectors: Vec<DMatrix<f64>>,
    /// Raw generators `[g_k, h_k^1, ..., h_k^p]`.
    pub generators: Vec<DMatrix<f64>>,
    /// `m × p` map with `v_a = Σ_b transform[(a, b)] · generators[b]`.
    pub transform: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// `Σ_a coef[a] v_a`.
    pub fn combine(&self, coef: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.vectors[0].nrows(), self.vectors[0].ncols());
        for (c, v) in coef.iter().zip(&self.vectors) {
            axpy(&mut out, *c, v);
        }
        out
    }

    /// Orthogonal projection of `w` onto the span.
    pub fn project(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let coef = DVector::from_iterator(self.dim(), self.vectors.iter().map(|v| inner(v, w)));
        self.combine(&coef)
    }

    /// Images of the basis vectors under a linear map known on the generators.
    fn map_generator_images(&self, images: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let (n, r) = self.vectors[0].shape();
        (0..self.dim())
            .map(|a| {
                let mut out = DMatrix::zeros(n, r);
                for (b, img) in images.iter().enumerate() {
                    let t = self.transform[(a, b)];
                    if t != 0.0 {
                        axpy(&mut out, t, img);
                    }
                }
                out
            })
            .collect()
    }
}

/// Gradient plus up to `depth` projected displacements `Proj_x(x_k - x_{k-i})`,
/// orthonormalized by modified Gram–Schmidt with one re-orthogonalization pass.
pub fn build_subspace(manifold: &Manifold, state: &IterationState, depth: usize) -> Result<SubspaceBasis, SolverError> {
    if state.grad_norm == 0.0 || !state.grad_norm.is_finite() {
        return Err(SolverError::ZeroGradient);
    }
    let mut generators = vec![state.grad.clone()];
    for past in state.history.iter().take(depth) {
        let disp = &state.x - &past.x;
        generators.push(manifold.proj_tangent_unchecked(&state.x, &disp));
    }
    let p = generators.len();
    let mut vectors: Vec<DMatrix<f64>> = Vec::with_capacity(p);
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(p);
    for (b, gen) in generators.iter().enumerate() {
        let norm0 = gen.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut w = gen.clone();
        let mut coef = DVector::zeros(p);
        coef[b] = 1.0;
        for _pass in 0..2 {
            for (v, t) in vectors.iter().zip(&rows) {
                let alpha = inner(v, &w);
                axpy(&mut w, -alpha, v);
                coef.axpy(-alpha, t, 1.0);
            }
        }
        let norm = w.norm();
        if norm < DROP_RTOL * norm0 {
            continue;
        }
        vectors.push(w / norm);
        rows.push(coef / norm);
    }
    let m = vectors.len();
    let transform = DMatrix::from_fn(m, p, |a, b| rows[a][b]);
    Ok(SubspaceBasis {
        vectors,
        generators,
        transform,
    })
}

fn reduced_gradient(basis: &SubspaceBasis, grad: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(basis.dim(), basis.vectors.iter().map(|v| inner(v, grad)))
}

fn gram_against(basis: &SubspaceBasis, images: &[DMatrix<f64>]) -> DMatrix<f64> {
    let m = basis.dim();
    DMatrix::from_fn(m, m, |a, c| inner(&basis.vectors[a], &images[c]))
}

/// Reduced model from exact Riemannian Hessian-vector products.
pub fn reduced_model_exact<P: Objective + ?Sized>(
    problem: &P,
    manifold: &Manifold,
    state: &IterationState,
    basis: &SubspaceBasis,
) -> Result<ReducedModel, SolverError> {
    let mut images = Vec::with_capacity(basis.dim());
    for v in &basis.vectors {
        let ehess = problem
            .hessian_vector(&state.x, v)
            .ok_or(SolverError::HessianUnavailable)?;
        images.push(manifold.hess_vec_unchecked(&state.x, &state.egrad, &ehess, v)?);
    }
    let q = gram_against(basis, &images);
    Ok(ReducedModel::new(reduced_gradient(basis, &state.grad), q, state.gamma)?)
}

/// Result of the finite-difference assembly.
#[derive(Debug, Clone)]
pub struct FdModel {
    pub model: ReducedModel,
    /// Probe length actually used (after retries).
    pub eta: f64,
    pub gradient_evaluations: usize,
}

/// Reduced model from finite differences: secants `g_k - Proj_{x_k}(g_{k-i})`
/// along the history displacements and one gradient probe along `g_k`.
pub fn reduced_model_fd<P: Objective + ?Sized>(
    problem: &P,
    manifold: &Manifold,
    state: &IterationState,
    basis: &SubspaceBasis,
    eta: f64,
) -> Result<FdModel, SolverError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(SolverError::InvalidConfig(format!("fd_eta must be positive, got {eta}")));
    }
    let g = &state.grad;
    let gnorm = state.grad_norm;
    let mut images = Vec::with_capacity(basis.generators.len());

    // Probe along the unit direction so the displacement is η regardless of
    // ‖g‖: Hess[g] ≈ ‖g‖ · (grad f(Retr(η ĝ)) - g) / η.
    let unit = g / gnorm;
    let mut eta_used = eta;
    let mut last_err = None;
    let mut probe_image = None;
    let mut evals = 0;
    for _ in 0..4 {
        match manifold.retract_unchecked(&state.x, &(&unit * eta_used)) {
            Ok(y) => {
                let (_, egrad_y) = problem.value_and_gradient(&y);
                evals += 1;
                let grad_y = manifold.proj_tangent_unchecked(&y, &egrad_y);
                let back = manifold.proj_tangent_unchecked(&state.x, &grad_y);
                probe_image = Some((back - g) * (gnorm / eta_used));
                break;
            }
            Err(e) => {
                last_err = Some(e);
                eta_used /= 10.0;
            }
        }
    }
    let probe_image = match probe_image {
        Some(img) => img,
        None => return Err(SolverError::Geometry(last_err.expect("at least one failure"))),
    };
    images.push(probe_image);

    for past in state.history.iter().take(basis.generators.len() - 1) {
        let back = manifold.proj_tangent_unchecked(&state.x, &past.grad);
        images.push(g - back);
    }
    let basis_images = basis.map_generator_images(&images);
    let q = gram_against(basis, &basis_images);
    Ok(FdModel {
        model: ReducedModel::new(reduced_gradient(basis, g), q, state.gamma)?,
        eta: eta_used,
        gradient_evaluations: evals,
    })
}
