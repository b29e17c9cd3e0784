//! Intersections of spheres and products of them, one factor per matrix row.
//!
//! A row constrained by anchors `y_1..y_k` with radii `d_1..d_k` lives on
//! `{x : ‖x - y_j‖ = d_j for all j}`. Redundant spheres are removed by
//! [`reduce_constraints`]; after that the set is either a smooth manifold on
//! which the normals `x - y_j` are linearly independent, or a single point.

use nalgebra::{DMatrix, DVector};

use super::GeometryError;
use crate::linalg;

/// Stopping tolerance on `max_j |‖x - y_j‖² - d_j²|` for projections.
pub const PROJECTION_TOL: f64 = 1e-12;
/// Gauss–Newton iteration cap for projections.
pub const PROJECTION_MAX_ITERS: usize = 50;
/// Relative tolerance of the inconsistency certificate.
pub const CONSISTENCY_RTOL: f64 = 1e-8;

/// Role of one row inside a [`SphereProduct`].
#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    /// No constraints: a Euclidean factor.
    Free,
    /// Smooth sphere intersection with independent normals.
    Constrained,
    /// The feasible set is a single point, stored here.
    Fixed(DVector<f64>),
}

/// Constraint data for one row after redundancy removal.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRow {
    /// `k × r`, one anchor per row.
    pub anchors: DMatrix<f64>,
    pub radii: Vec<f64>,
    pub status: RowStatus,
}

impl SphereRow {
    pub fn free(r: usize) -> Self {
        Self {
            anchors: DMatrix::zeros(0, r),
            radii: Vec::new(),
            status: RowStatus::Free,
        }
    }

    /// Builds a row from raw anchors and radii: removes redundant spheres,
    /// detects singletons and validates consistency.
    pub fn from_constraints(anchors: DMatrix<f64>, radii: Vec<f64>) -> Result<Self, GeometryError> {
        let r = anchors.ncols();
        if anchors.nrows() == 0 {
            return Ok(Self::free(r));
        }
        let probe = find_feasible_point(&anchors, &radii)?;
        let report = reduce_constraints(&anchors, &radii, Some(&probe))?;
        let kept = anchors.select_rows(report.kept.iter());
        let kept_radii: Vec<f64> = report.kept.iter().map(|&i| radii[i]).collect();
        let status = match report.singleton {
            Some(p) => RowStatus::Fixed(p),
            None => RowStatus::Constrained,
        };
        Ok(Self {
            anchors: kept,
            radii: kept_radii,
            status,
        })
    }

    pub fn num_constraints(&self) -> usize {
        self.radii.len()
    }

    /// Dimension of the tangent space at `x`.
    pub fn tangent_dim(&self, x: &DVector<f64>) -> usize {
        match &self.status {
            RowStatus::Free => self.anchors.ncols(),
            RowStatus::Fixed(_) => 0,
            RowStatus::Constrained => self.anchors.ncols() - linalg::rank(&normal_matrix(x, &self.anchors)),
        }
    }

    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        constraint_residual(x, &self.anchors, &self.radii)
    }

    pub fn project_tangent(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match &self.status {
            RowStatus::Free => v.clone(),
            RowStatus::Fixed(_) => DVector::zeros(v.len()),
            RowStatus::Constrained => {
                let basis = linalg::range_basis(&normal_matrix(x, &self.anchors));
                let coef = basis.tr_mul(v);
                v - basis * coef
            }
        }
    }

    pub fn retract(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>, f64> {
        match &self.status {
            RowStatus::Free => Ok(x + h),
            RowStatus::Fixed(p) => Ok(p.clone()),
            RowStatus::Constrained => project_onto_spheres(&self.anchors, &self.radii, &(x + h)),
        }
    }
}

/// Outcome of [`reduce_constraints`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReductionReport {
    /// Indices (into the input) of the constraints that remain.
    pub kept: Vec<usize>,
    /// Removed indices with the certificate `λ` (over the constraints active
    /// at the time of removal, in the order of `kept` at that moment) showing
    /// the dropped sphere is implied by the others.
    pub dropped: Vec<(usize, DVector<f64>)>,
    /// The unique feasible point when the intersection is a singleton.
    pub singleton: Option<DVector<f64>>,
}

impl ConstraintReductionReport {
    pub fn is_singleton(&self) -> bool {
        self.singleton.is_some()
    }
}

/// `[e, Y]` for the anchors listed in `idx`.
fn affine_matrix(anchors: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let r = anchors.ncols();
    DMatrix::from_fn(idx.len(), r + 1, |i, j| if j == 0 { 1.0 } else { anchors[(idx[i], j - 1)] })
}

/// Columns `x - y_j`.
pub fn normal_matrix(x: &DVector<f64>, anchors: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, r) = anchors.shape();
    DMatrix::from_fn(r, k, |i, j| x[i] - anchors[(j, i)])
}

/// `max_j |‖x - y_j‖² - d_j²|`; zero when there are no constraints.
pub fn constraint_residual(x: &DVector<f64>, anchors: &DMatrix<f64>, radii: &[f64]) -> f64 {
    constraint_values(x, anchors, radii)
        .iter()
        .fold(0.0_f64, |m, c| m.max(c.abs()))
}

fn constraint_values(x: &DVector<f64>, anchors: &DMatrix<f64>, radii: &[f64]) -> DVector<f64> {
    let (k, r) = anchors.shape();
    DVector::from_fn(k, |j, _| {
        let mut s = 0.0;
        for c in 0..r {
            let t = x[c] - anchors[(j, c)];
            s += t * t;
        }
        s - radii[j] * radii[j]
    })
}

/// Removes spheres implied by the others.
///
/// While `rank([e, Y]) < k`, a left null vector `λ` of `[e, Y]` shows that
/// `Σ λ_j (‖x - y_j‖² - d_j²) = Σ λ_j (‖y_j‖² - d_j²)` for every `x`, so the
/// constraint with the largest `|λ_j|` is implied by the rest whenever that
/// constant vanishes; a nonzero constant proves the intersection is empty.
///
/// If a feasible point is supplied and the normals at it are linearly
/// dependent after the reduction, the intersection is a single point and the
/// report carries it.
pub fn reduce_constraints(
    anchors: &DMatrix<f64>,
    radii: &[f64],
    feasible: Option<&DVector<f64>>,
) -> Result<ConstraintReductionReport, GeometryError> {
    let (k, r) = anchors.shape();
    if k == 0 {
        return Err(GeometryError::InvalidInput("at least one constraint is required".into()));
    }
    if radii.len() != k {
        return Err(GeometryError::ShapeMismatch {
            expected: (k, 1),
            found: (radii.len(), 1),
        });
    }
    if let Some(i) = radii.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(GeometryError::InvalidInput(format!("radius {i} is not a positive finite number")));
    }
    if anchors.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidInput("anchor coordinates must be finite".into()));
    }
    for i in 0..k {
        for j in i + 1..k {
            if anchors.row(i) == anchors.row(j) && radii[i] != radii[j] {
                return Err(GeometryError::DegenerateAnchors { first: i, second: j });
            }
        }
    }

    let offsets: Vec<f64> = (0..k)
        .map(|j| anchors.row(j).norm_squared() - radii[j] * radii[j])
        .collect();
    let mut kept: Vec<usize> = (0..k).collect();
    let mut dropped = Vec::new();
    loop {
        let a = affine_matrix(anchors, &kept);
        if linalg::rank(&a) == kept.len() {
            break;
        }
        let (lambda, _, _) = linalg::smallest_left_singular(&a);
        let mut lhs = 0.0;
        let mut scale = 0.0;
        for (pos, &j) in kept.iter().enumerate() {
            lhs += lambda[pos] * offsets[j];
            scale += lambda[pos].abs() * (anchors.row(j).norm_squared() + radii[j] * radii[j]);
        }
        if lhs.abs() > CONSISTENCY_RTOL * scale.max(f64::MIN_POSITIVE) {
            return Err(GeometryError::Inconsistent {
                certificate: lhs,
                scale,
            });
        }
        let pos = lambda
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
            .0;
        let removed = kept.remove(pos);
        dropped.push((removed, lambda));
    }

    let singleton = match feasible {
        Some(x) => {
            if x.len() != r {
                return Err(GeometryError::ShapeMismatch {
                    expected: (r, 1),
                    found: (x.len(), 1),
                });
            }
            let kept_anchors = anchors.select_rows(kept.iter());
            let normals = normal_matrix(x, &kept_anchors);
            if linalg::rank(&normals) < kept.len() {
                Some(x.clone())
            } else {
                None
            }
        }
        None => None,
    };
    Ok(ConstraintReductionReport {
        kept,
        dropped,
        singleton,
    })
}

/// Gauss–Newton projection of `start` onto the sphere intersection using
/// minimum-norm steps. Returns the final residual on failure.
pub fn project_onto_spheres(
    anchors: &DMatrix<f64>,
    radii: &[f64],
    start: &DVector<f64>,
) -> Result<DVector<f64>, f64> {
    project_with_limits(anchors, radii, start, PROJECTION_TOL, PROJECTION_MAX_ITERS)
}

pub(crate) fn project_with_limits(
    anchors: &DMatrix<f64>,
    radii: &[f64],
    start: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<DVector<f64>, f64> {
    let mut z = start.clone();
    let mut c = constraint_values(&z, anchors, radii);
    let mut res = c.amax();
    for _ in 0..max_iters {
        if res <= tol {
            return Ok(z);
        }
        let jac = normal_matrix(&z, anchors).transpose() * 2.0;
        let step = linalg::lstsq_min_norm(&jac, &c);
        z -= step;
        c = constraint_values(&z, anchors, radii);
        res = c.amax();
        if !res.is_finite() {
            return Err(res);
        }
    }
    if res <= tol {
        Ok(z)
    } else {
        Err(res)
    }
}

/// Deterministic search for some feasible point of the intersection, used to
/// classify rows. Starts from points on the first sphere in a fixed set of
/// directions; tolerates slower (non-LICQ) convergence.
pub fn find_feasible_point(anchors: &DMatrix<f64>, radii: &[f64]) -> Result<DVector<f64>, GeometryError> {
    let (k, r) = anchors.shape();
    let centroid = DVector::from_fn(r, |c, _| (0..k).map(|j| anchors[(j, c)]).sum::<f64>() / k as f64);
    let mut best = f64::INFINITY;
    for attempt in 0..(2 * r + 8) {
        // Golden-ratio direction sequence: deterministic and well spread.
        let mut dir = DVector::from_fn(r, |c, _| {
            let t = ((attempt * r + c + 1) as f64 * 0.618_033_988_749_894_9).fract();
            t - 0.5
        });
        if dir.norm() == 0.0 {
            dir[0] = 1.0;
        }
        dir.normalize_mut();
        let start = &centroid + dir * radii[0];
        match project_with_limits(anchors, radii, &start, PROJECTION_TOL, 500) {
            Ok(z) => return Ok(z),
            Err(res) => best = best.min(res),
        }
    }
    // Tangential intersections converge only linearly; accept a looser fit.
    if best <= 1e-9 {
        for attempt in 0..(2 * r + 8) {
            let dir = DVector::from_fn(r, |c, _| (((attempt * r + c + 1) as f64 * 0.618_033_988_749_894_9).fract()) - 0.5);
            let start = &centroid + dir.normalize() * radii[0];
            if let Ok(z) = project_with_limits(anchors, radii, &start, 1e-9, 2000) {
                return Ok(z);
            }
        }
    }
    Err(GeometryError::NoFeasiblePoint { residual: best })
}
