//! Sensor network localization with exact anchor distances imposed as
//! per-row sphere constraints.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::manifold::{Manifold, SphereProduct, SphereRow};
use crate::par;
use crate::rng;
use crate::solver::{solve, Objective, SolveReport, SolverConfig};

/// Anchor positions used by [`snl_generate`].
pub const DEFAULT_ANCHORS: [[f64; 3]; 4] = [
    [0.3, -0.3, -0.3],
    [-0.3, 0.3, -0.3],
    [-0.3, -0.3, 0.3],
    [0.3, 0.3, 0.3],
];

/// Multiplicative noise level on sensor–sensor distances.
pub const NOISE_FACTOR: f64 = 0.2;

/// Width of the lifted problem solved by the warm start.
pub const LIFT_RANK: usize = 20;

/// Gradient tolerance of the lifted solve.
pub const LIFT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnlInstance {
    pub n: usize,
    pub d: usize,
    /// One anchor position per entry, each of length `d`.
    pub anchors: Vec<Vec<f64>>,
    /// True sensor positions, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<Vec<f64>>>,
    /// Sensor pairs `(i, j, d_ij)` with `i < j`.
    pub neighbor_edges: Vec<(usize, usize, f64)>,
    /// Sensor–anchor pairs `(i, k, d_ik)`.
    pub anchor_edges: Vec<(usize, usize, f64)>,
    pub lambda_reg: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SnlInstance {
    pub fn validate(&self) -> Result<(), ProblemError> {
        let bad = |msg: String| Err(ProblemError::Invalid(msg));
        if self.d == 0 {
            return bad("dimension d must be positive".into());
        }
        if let Some(a) = self.anchors.iter().find(|a| a.len() != self.d) {
            return bad(format!("anchor of length {} in dimension {}", a.len(), self.d));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.n || t.iter().any(|row| row.len() != self.d) {
                return bad("truth must be n rows of length d".into());
            }
        }
        for &(i, j, dist) in &self.neighbor_edges {
            if !(i < j && j < self.n) {
                return bad(format!("neighbor edge ({i}, {j}) must satisfy i < j < n"));
            }
            if !(dist > 0.0 && dist.is_finite()) {
                return bad(format!("neighbor edge ({i}, {j}) has distance {dist}"));
            }
        }
        for &(i, k, dist) in &self.anchor_edges {
            if i >= self.n || k >= self.anchors.len() {
                return bad(format!("anchor edge ({i}, {k}) out of range"));
            }
            if !(dist > 0.0 && dist.is_finite()) {
                return bad(format!("anchor edge ({i}, {k}) has distance {dist}"));
            }
        }
        if !(self.lambda_reg >= 0.0 && self.lambda_reg.is_finite()) {
            return bad(format!("lambda_reg must be nonnegative, got {}", self.lambda_reg));
        }
        Ok(())
    }

    pub fn truth_matrix(&self) -> Option<DMatrix<f64>> {
        self.truth
            .as_ref()
            .map(|t| DMatrix::from_fn(self.n, self.d, |i, j| t[i][j]))
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.neighbor_edges.len() as f64 / self.n as f64
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Random instance: sensors uniform in `[-0.5, 0.5]³`, four fixed anchors,
/// neighbor radius chosen so the expected degree is about 15, noisy
/// sensor–sensor distances and exact sensor–anchor distances.
pub fn snl_generate(n: usize, seed: u64) -> Result<SnlInstance, ProblemError> {
    if n < 10 {
        return Err(ProblemError::Invalid(format!("need at least 10 sensors, got {n}")));
    }
    let d = 3;
    let mut gen = rng::stream(seed, rng::STREAM_INSTANCE);
    let truth: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| gen.random::<f64>() - 0.5).collect())
        .collect();
    let anchors: Vec<Vec<f64>> = DEFAULT_ANCHORS.iter().map(|a| a.to_vec()).collect();

    let radius = (45.0 / (4.0 * std::f64::consts::PI * n as f64)).cbrt();
    let anchor_radius = 0.33 * std::f64::consts::SQRT_2;
    let mut noise = rng::stream(seed, rng::STREAM_NOISE);
    let mut neighbor_edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dij = dist(&truth[i], &truth[j]);
            if dij <= radius {
                let xi: f64 = noise.sample(StandardNormal);
                neighbor_edges.push((i, j, dij * (1.0 + NOISE_FACTOR * xi).abs()));
            }
        }
    }
    let mut anchor_edges = Vec::new();
    for (i, s) in truth.iter().enumerate() {
        for (k, a) in anchors.iter().enumerate() {
            let dik = dist(s, a);
            if dik <= anchor_radius {
                anchor_edges.push((i, k, dik));
            }
        }
    }
    Ok(SnlInstance {
        n,
        d,
        anchors,
        truth: Some(truth),
        neighbor_edges,
        anchor_edges,
        lambda_reg: 0.1 / n as f64,
        seed,
    })
}

/// `½ Σ_𝓝 (‖R_i - R_j‖² - d_ij²)² - λ‖R‖² + (λ/n)‖Rᵀe‖²` in any width `r`.
#[derive(Debug, Clone)]
pub struct SnlObjective {
    n: usize,
    lambda: f64,
    edges: Vec<(usize, usize, f64)>,
    /// Per-row `(neighbor, d²)` lists.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SnlObjective {
    pub fn new(inst: &SnlInstance) -> Self {
        let mut adjacency = vec![Vec::new(); inst.n];
        let edges: Vec<_> = inst.neighbor_edges.iter().map(|&(i, j, d)| (i, j, d * d)).collect();
        for &(i, j, d2) in &edges {
            adjacency[i].push((j, d2));
            adjacency[j].push((i, d2));
        }
        Self {
            n: inst.n,
            lambda: inst.lambda_reg,
            edges,
            adjacency,
        }
    }
}

fn row_dist2(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum()
}

impl Objective for SnlObjective {
    fn value_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let r = x.ncols();
        let fit: f64 = self
            .edges
            .iter()
            .map(|&(i, j, d2)| (row_dist2(x, i, j) - d2).powi(2))
            .sum();
        let colsum: Vec<f64> = (0..r).map(|c| x.column(c).sum()).collect();
        let sq: f64 = colsum.iter().map(|s| s * s).sum();
        let f = 0.5 * fit - self.lambda * x.norm_squared() + self.lambda / self.n as f64 * sq;

        let mean: Vec<f64> = colsum.iter().map(|s| s / self.n as f64).collect();
        let rows = par::map_indices(self.n, |i| {
            let mut g = vec![0.0; r];
            for &(j, d2) in &self.adjacency[i] {
                let res = 2.0 * (row_dist2(x, i, j) - d2);
                for (c, gc) in g.iter_mut().enumerate() {
                    *gc += res * (x[(i, c)] - x[(j, c)]);
                }
            }
            for (c, gc) in g.iter_mut().enumerate() {
                *gc -= 2.0 * self.lambda * (x[(i, c)] - mean[c]);
            }
            g
        });
        let grad = DMatrix::from_fn(self.n, r, |i, c| rows[i][c]);
        (f, grad)
    }
}

/// Row `i` constrained to the spheres around its adjacent anchors, padded
/// with zeros to width `r_amb`.
pub fn snl_manifold(inst: &SnlInstance, r_amb: usize) -> Result<Manifold, ProblemError> {
    inst.validate()?;
    if r_amb < inst.d {
        return Err(ProblemError::Invalid(format!("ambient width {r_amb} below dimension {}", inst.d)));
    }
    let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.n];
    for &(i, k, dik) in &inst.anchor_edges {
        per_row[i].push((k, dik));
    }
    let rows = par::map_indices(inst.n, |i| {
        let cons = &per_row[i];
        let anchors = DMatrix::from_fn(cons.len(), r_amb, |a, c| {
            if c < inst.d {
                inst.anchors[cons[a].0][c]
            } else {
                0.0
            }
        });
        let radii = cons.iter().map(|c| c.1).collect();
        SphereRow::from_constraints(anchors, radii).map_err(|source| ProblemError::Row { row: i, source })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Manifold::SphereIntersectionProduct(SphereProduct::new(r_amb, rows)?))
}

/// Seeded random point `rand(n, r) - 0.5`, mapped row by row onto the manifold.
pub fn snl_random_start(manifold: &Manifold, seed: u64) -> Result<DMatrix<f64>, ProblemError> {
    let (n, r) = manifold.shape();
    let mut gen = rng::stream(seed, rng::STREAM_START);
    Ok(manifold.project_point(&rng::uniform_centered(&mut gen, n, r))?)
}

/// Output of [`snl_warmstart`].
#[derive(Debug, Clone)]
pub struct WarmStart {
    /// Feasible `n × d` starting point.
    pub start: DMatrix<f64>,
    pub lifted: SolveReport,
}

/// Solves the problem lifted to width [`LIFT_RANK`] to gradient tolerance
/// [`LIFT_EPS`], then truncates to the first `d` columns and projects each
/// row back onto its constraint set.
pub fn snl_warmstart(inst: &SnlInstance, config: &SolverConfig, seed: u64) -> Result<WarmStart, ProblemError> {
    let r_amb = LIFT_RANK.max(inst.d);
    let lifted_manifold = snl_manifold(inst, r_amb)?;
    let objective = SnlObjective::new(inst);
    let x0 = snl_random_start(&lifted_manifold, seed)?;
    let cfg = SolverConfig {
        eps_grad: LIFT_EPS,
        ..config.clone()
    };
    let lifted = solve(&objective, &lifted_manifold, &x0, &cfg)?;
    let truncated = lifted.x.columns(0, inst.d).into_owned();
    let manifold = snl_manifold(inst, inst.d)?;
    let start = manifold.project_point(&truncated)?;
    Ok(WarmStart { start, lifted })
}

/// `‖R - truth‖_F / √n`, with no alignment.
pub fn snl_rmse(x: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64, ProblemError> {
    if x.shape() != truth.shape() {
        return Err(ProblemError::Shape {
            expected: truth.shape(),
            found: x.shape(),
        });
    }
    Ok((x - truth).norm() / (x.nrows() as f64).sqrt())
}
