//! Embedded submanifolds of `R^{n×r}` with the Frobenius metric.
//!
//! Points and tangent vectors are plain `n × r` matrices. Tangent vectors are
//! only meaningful together with the point they were produced at; the
//! checked entry points ([`Manifold::proj_tangent`] and friends) validate the
//! base point, while the `*_unchecked` variants used inside the solver skip
//! the feasibility scan.

pub mod sphere;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{self, sym};
use crate::par;
pub use sphere::{reduce_constraints, ConstraintReductionReport, RowStatus, SphereRow};

/// Dense `n × r` point in the embedding space.
pub type AmbientMatrix = DMatrix<f64>;
/// Dense `n × r` tangent vector; its base point is tracked by the caller.
pub type TangentVector = DMatrix<f64>;

/// Base points must satisfy the constraints to this tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("base point is infeasible (residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("retraction did not converge on row {row} (residual {residual:.3e})")]
    RetractionFailed { row: usize, residual: f64 },
    #[error("{0} is not supported on this manifold")]
    Unsupported(&'static str),
    #[error("sphere intersection is empty (certificate {certificate:.3e}, scale {scale:.3e})")]
    Inconsistent { certificate: f64, scale: f64 },
    #[error("anchors {first} and {second} coincide but have different radii")]
    DegenerateAnchors { first: usize, second: usize },
    #[error("could not locate a feasible point (best residual {residual:.3e})")]
    NoFeasiblePoint { residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Euclidean,
    ObliqueRows,
    Stiefel,
    SphereIntersectionProduct,
}

/// Product over rows of sphere intersections (free, constrained or fixed).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereProduct {
    pub r: usize,
    pub rows: Vec<SphereRow>,
}

impl SphereProduct {
    pub fn new(r: usize, rows: Vec<SphereRow>) -> Result<Self, GeometryError> {
        if let Some(bad) = rows.iter().position(|row| row.anchors.ncols() != r) {
            return Err(GeometryError::ShapeMismatch {
                expected: (rows[bad].anchors.nrows(), r),
                found: rows[bad].anchors.shape(),
            });
        }
        Ok(Self { r, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }
}

/// Which embedded submanifold a point lives on.
#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    Euclidean { n: usize, r: usize },
    /// Every row has unit norm.
    ObliqueRows { n: usize, r: usize },
    /// `XᵀX = I_r`.
    Stiefel { n: usize, r: usize },
    SphereIntersectionProduct(SphereProduct),
}

fn row_of(x: &DMatrix<f64>, i: usize) -> DVector<f64> {
    x.row(i).transpose()
}

fn assemble_rows(n: usize, r: usize, rows: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(n, r, |i, j| rows[i][j])
}

/// `diag(c) · x`, scaling row `i` by `c[i]`.
fn scale_rows(x: &DMatrix<f64>, c: &[f64]) -> DMatrix<f64> {
    let mut out = x.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= c[i];
    }
    out
}

/// Row-wise inner products `⟨a_i, b_i⟩`.
pub fn row_dots(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let (ca, cb) = (a.column(j), b.column(j));
        for i in 0..a.nrows() {
            out[i] += ca[i] * cb[i];
        }
    }
    out
}

impl Manifold {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            Manifold::Euclidean { .. } => ManifoldKind::Euclidean,
            Manifold::ObliqueRows { .. } => ManifoldKind::ObliqueRows,
            Manifold::Stiefel { .. } => ManifoldKind::Stiefel,
            Manifold::SphereIntersectionProduct(_) => ManifoldKind::SphereIntersectionProduct,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Manifold::Euclidean { n, r } | Manifold::ObliqueRows { n, r } | Manifold::Stiefel { n, r } => (*n, *r),
            Manifold::SphereIntersectionProduct(p) => (p.n(), p.r),
        }
    }

    fn check_shape(&self, a: &DMatrix<f64>) -> Result<(), GeometryError> {
        let expected = self.shape();
        if a.shape() != expected {
            return Err(GeometryError::ShapeMismatch {
                expected,
                found: a.shape(),
            });
        }
        Ok(())
    }

    fn check_base(&self, x: &DMatrix<f64>) -> Result<(), GeometryError> {
        self.check_shape(x)?;
        let residual = self.feasibility_residual(x);
        if !(residual <= FEASIBILITY_TOL) {
            return Err(GeometryError::Infeasible { residual });
        }
        Ok(())
    }

    /// Largest constraint violation at `x`.
    pub fn feasibility_residual(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            Manifold::Euclidean { .. } => {
                if x.iter().all(|v| v.is_finite()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Manifold::ObliqueRows { .. } => row_dots(x, x)
                .iter()
                .fold(0.0_f64, |m, s| m.max((s - 1.0).abs())),
            Manifold::Stiefel { r, .. } => {
                let gram = x.tr_mul(x) - DMatrix::identity(*r, *r);
                linalg::max_abs(&gram)
            }
            Manifold::SphereIntersectionProduct(p) => {
                let res = par::map_indices(p.n(), |i| p.rows[i].residual(&row_of(x, i)));
                res.into_iter().fold(0.0_f64, f64::max)
            }
        }
    }

    /// Orthogonal projection of `v` onto the tangent space at `x`.
    pub fn proj_tangent(&self, x: &AmbientMatrix, v: &AmbientMatrix) -> Result<TangentVector, GeometryError> {
        self.check_base(x)?;
        self.check_shape(v)?;
        Ok(self.proj_tangent_unchecked(x, v))
    }

    pub fn proj_tangent_unchecked(&self, x: &AmbientMatrix, v: &AmbientMatrix) -> TangentVector {
        match self {
            Manifold::Euclidean { .. } => v.clone(),
            Manifold::ObliqueRows { .. } => {
                let c = row_dots(x, v);
                v - scale_rows(x, &c)
            }
            Manifold::Stiefel { .. } => v - x * sym(&x.tr_mul(v)),
            Manifold::SphereIntersectionProduct(p) => {
                let rows = par::map_indices(p.n(), |i| p.rows[i].project_tangent(&row_of(x, i), &row_of(v, i)));
                assemble_rows(p.n(), p.r, &rows)
            }
        }
    }

    /// Maps the tangent vector `h` at `x` back onto the manifold.
    pub fn retract(&self, x: &AmbientMatrix, h: &TangentVector) -> Result<AmbientMatrix, GeometryError> {
        self.check_shape(x)?;
        self.check_shape(h)?;
        self.retract_unchecked(x, h)
    }

    pub fn retract_unchecked(&self, x: &AmbientMatrix, h: &TangentVector) -> Result<AmbientMatrix, GeometryError> {
        if h.iter().all(|v| *v == 0.0) {
            return Ok(x.clone());
        }
        match self {
            Manifold::Euclidean { .. } => Ok(x + h),
            Manifold::ObliqueRows { .. } => Ok(normalize_rows(&(x + h))),
            Manifold::Stiefel { .. } => polar_factor(&(x + h)),
            Manifold::SphereIntersectionProduct(p) => {
                let rows = par::map_indices(p.n(), |i| p.rows[i].retract(&row_of(x, i), &row_of(h, i)));
                let mut out = Vec::with_capacity(p.n());
                for (i, row) in rows.into_iter().enumerate() {
                    match row {
                        Ok(z) => out.push(z),
                        Err(residual) => return Err(GeometryError::RetractionFailed { row: i, residual }),
                    }
                }
                Ok(assemble_rows(p.n(), p.r, &out))
            }
        }
    }

    /// Vector transport by projection onto the tangent space at `y`.
    pub fn transport(
        &self,
        x: &AmbientMatrix,
        y: &AmbientMatrix,
        u: &TangentVector,
    ) -> Result<TangentVector, GeometryError> {
        self.check_base(x)?;
        self.proj_tangent(y, u)
    }

    /// Riemannian gradient from the Euclidean one.
    pub fn riemannian_grad(&self, x: &AmbientMatrix, egrad: &AmbientMatrix) -> Result<TangentVector, GeometryError> {
        self.proj_tangent(x, egrad)
    }

    /// Riemannian Hessian applied to `h`, from the Euclidean gradient and the
    /// Euclidean Hessian-vector product `ehess_h`.
    pub fn hess_vec(
        &self,
        x: &AmbientMatrix,
        egrad: &AmbientMatrix,
        ehess_h: &AmbientMatrix,
        h: &TangentVector,
    ) -> Result<TangentVector, GeometryError> {
        self.check_base(x)?;
        self.check_shape(egrad)?;
        self.check_shape(ehess_h)?;
        self.check_shape(h)?;
        self.hess_vec_unchecked(x, egrad, ehess_h, h)
    }

    pub fn hess_vec_unchecked(
        &self,
        x: &AmbientMatrix,
        egrad: &AmbientMatrix,
        ehess_h: &AmbientMatrix,
        h: &TangentVector,
    ) -> Result<TangentVector, GeometryError> {
        match self {
            Manifold::Euclidean { .. } => Ok(ehess_h.clone()),
            Manifold::ObliqueRows { .. } => {
                let c = row_dots(x, egrad);
                Ok(self.proj_tangent_unchecked(x, ehess_h) - scale_rows(h, &c))
            }
            Manifold::Stiefel { .. } => {
                let w = ehess_h - h * sym(&x.tr_mul(egrad));
                Ok(self.proj_tangent_unchecked(x, &w))
            }
            Manifold::SphereIntersectionProduct(_) => Err(GeometryError::Unsupported("Hessian-vector product")),
        }
    }

    /// Nearest-point style map from an arbitrary matrix onto the manifold,
    /// used to build feasible starting points.
    pub fn project_point(&self, x: &AmbientMatrix) -> Result<AmbientMatrix, GeometryError> {
        self.check_shape(x)?;
        match self {
            Manifold::Euclidean { .. } => Ok(x.clone()),
            Manifold::ObliqueRows { .. } => Ok(normalize_rows(x)),
            Manifold::Stiefel { .. } => polar_factor(x),
            Manifold::SphereIntersectionProduct(p) => {
                let rows = par::map_indices(p.n(), |i| project_row_with_retries(&p.rows[i], &row_of(x, i), i));
                let mut out = Vec::with_capacity(p.n());
                for row in rows {
                    out.push(row?);
                }
                Ok(assemble_rows(p.n(), p.r, &out))
            }
        }
    }

    /// Dimension of the tangent space at `x`.
    pub fn tangent_dim(&self, x: &AmbientMatrix) -> usize {
        match self {
            Manifold::Euclidean { n, r } => n * r,
            Manifold::ObliqueRows { n, r } => n * (r - 1),
            Manifold::Stiefel { n, r } => n * r - r * (r + 1) / 2,
            Manifold::SphereIntersectionProduct(p) => {
                (0..p.n()).map(|i| p.rows[i].tangent_dim(&row_of(x, i))).sum()
            }
        }
    }
}

/// Projects one constrained row, perturbing the start on failure. Falls back
/// to walking from an anchor along a fixed direction.
fn project_row_with_retries(row: &SphereRow, start: &DVector<f64>, index: usize) -> Result<DVector<f64>, GeometryError> {
    match &row.status {
        RowStatus::Free => return Ok(start.clone()),
        RowStatus::Fixed(p) => return Ok(p.clone()),
        RowStatus::Constrained => {}
    }
    let mut best = f64::INFINITY;
    let mut attempt_start = start.clone();
    for attempt in 0..6 {
        match sphere::project_onto_spheres(&row.anchors, &row.radii, &attempt_start) {
            Ok(z) => return Ok(z),
            Err(res) => best = best.min(res),
        }
        // 1e-3 perturbation, deterministic per (row, attempt)
        attempt_start = start.clone();
        for (c, v) in attempt_start.iter_mut().enumerate() {
            let t = (((index * 7919 + attempt * 104_729 + c * 31 + 1) as f64) * 0.618_033_988_749_894_9).fract();
            *v += 1e-3 * (t - 0.5) * 2.0;
        }
    }
    sphere::find_feasible_point(&row.anchors, &row.radii).map_err(|_| GeometryError::RetractionFailed {
        row: index,
        residual: best,
    })
}

pub fn normalize_rows(x: &DMatrix<f64>) -> DMatrix<f64> {
    let norms: Vec<f64> = row_dots(x, x).into_iter().map(|s| s.sqrt()).collect();
    let inv: Vec<f64> = norms.iter().map(|s| if *s > 0.0 { 1.0 / s } else { 0.0 }).collect();
    let mut out = scale_rows(x, &inv);
    // A zero row has no nearest unit vector; pick the first basis direction.
    for (i, s) in norms.iter().enumerate() {
        if *s == 0.0 && out.ncols() > 0 {
            out[(i, 0)] = 1.0;
        }
    }
    out
}

/// Polar factor `A (AᵀA)^{-1/2}` of a full-column-rank matrix.
pub fn polar_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let gram = sym(&a.tr_mul(a));
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-14 * lmax.max(f64::MIN_POSITIVE))) {
        return Err(GeometryError::InvalidInput("polar factor of a rank-deficient matrix".into()));
    }
    let v = &eig.eigenvectors;
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(a * (v * inv_sqrt * v.transpose()))
}
