//! Low-rank max-cut: minimize `-⟨L, RRᵀ⟩` over matrices with unit rows.

use nalgebra::DMatrix;
use rand::Rng;

use super::ProblemError;
use crate::manifold::{row_dots, Manifold};
use crate::par;
use crate::rng;
use crate::solver::Objective;

/// Default cap on `n` for the dense eigendecomposition in [`maxcut_kkt`].
pub const KKT_DENSE_CAP: usize = 4000;

const ROW_BLOCK: usize = 256;

/// Symmetric sparse matrix in compressed-row form (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds from upper or lower triangle triplets `(i, j, v)`; each
    /// off-diagonal entry is mirrored and duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, ProblemError> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(ProblemError::Invalid(format!("entry ({i}, {j}) outside a {n}×{n} matrix")));
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Graph Laplacian `D - W` from 0-based weighted edges `(i, j, w)`.
    pub fn laplacian(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, ProblemError> {
        let mut trip = Vec::with_capacity(3 * edges.len());
        for &(i, j, w) in edges {
            if i == j {
                return Err(ProblemError::Invalid(format!("self-loop at vertex {i}")));
            }
            trip.push((i, j, -w));
            trip.push((i, i, w));
            trip.push((j, j, w));
        }
        Self::from_triplets(n, &trip)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().cloned().zip(self.values[span].iter().cloned())
    }

    /// `A · X` for dense `X`; row blocks are evaluated in parallel.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n);
        let r = x.ncols();
        let blocks: Vec<usize> = (0..self.n.div_ceil(ROW_BLOCK)).collect();
        let parts = par::map_tasks(&blocks, |&b| {
            let lo = b * ROW_BLOCK;
            let hi = (lo + ROW_BLOCK).min(self.n);
            let mut out = DMatrix::zeros(hi - lo, r);
            for c in 0..r {
                let col = x.column(c);
                for i in lo..hi {
                    let mut s = 0.0;
                    for (j, v) in self.row(i) {
                        s += v * col[j];
                    }
                    out[(i - lo, c)] = s;
                }
            }
            out
        });
        let mut out = DMatrix::zeros(self.n, r);
        for (b, part) in parts.into_iter().enumerate() {
            out.view_mut((b * ROW_BLOCK, 0), part.shape()).copy_from(&part);
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, v)| self.row(j).any(|(k, w)| k == i && w == v))
        })
    }
}

/// Smallest `r` with `r² ≥ 2n`.
pub fn default_rank(n: usize) -> usize {
    let mut r = ((2 * n) as f64).sqrt().ceil() as usize;
    while r > 1 && (r - 1) * (r - 1) >= 2 * n {
        r -= 1;
    }
    while r * r < 2 * n {
        r += 1;
    }
    r.max(1)
}

#[derive(Debug, Clone)]
pub struct MaxcutInstance {
    pub laplacian: SparseSymmetric,
    pub n: usize,
    pub r: usize,
}

impl MaxcutInstance {
    pub fn new(laplacian: SparseSymmetric, r: usize) -> Result<Self, ProblemError> {
        if r == 0 {
            return Err(ProblemError::Invalid("factor width r must be at least 1".into()));
        }
        if !laplacian.is_symmetric() {
            return Err(ProblemError::Invalid("L must be symmetric".into()));
        }
        Ok(Self {
            n: laplacian.n(),
            laplacian,
            r,
        })
    }

    /// From 0-based weighted edges; `r` defaults to `⌈√(2n)⌉`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], r: Option<usize>) -> Result<Self, ProblemError> {
        let l = SparseSymmetric::laplacian(n, edges)?;
        let scale = l.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        if l.row_sums().iter().any(|s| s.abs() > 1e-12 * scale) {
            return Err(ProblemError::Invalid("Laplacian rows do not sum to zero".into()));
        }
        Self::new(l, r.unwrap_or_else(|| default_rank(n)))
    }

    pub fn manifold(&self) -> Manifold {
        Manifold::ObliqueRows { n: self.n, r: self.r }
    }
}

impl Objective for MaxcutInstance {
    fn value_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let lr = self.laplacian.mul_dense(x);
        let f = -lr.dot(x);
        (f, lr * -2.0)
    }

    fn hessian_vector(&self, _x: &DMatrix<f64>, h: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        Some(self.laplacian.mul_dense(h) * -2.0)
    }
}

/// KKT residue of a low-rank max-cut point, with the recovered dual.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResidue {
    pub resp: f64,
    pub resd: f64,
    pub pdgap: f64,
    pub residue: f64,
    pub lambda: Vec<f64>,
}

/// Certifies `R` against the max-cut SDP.
///
/// The dual is `λ_i = ⟨(LR)_i, R_i⟩`; dual infeasibility is the negative
/// part of the slack `Diag(λ) - L`, computed by a dense eigendecomposition
/// (refused above `dense_cap` vertices).
pub fn maxcut_kkt(inst: &MaxcutInstance, r: &DMatrix<f64>, dense_cap: usize) -> Result<KktResidue, ProblemError> {
    let n = inst.n;
    if r.nrows() != n {
        return Err(ProblemError::Shape {
            expected: (n, inst.r),
            found: r.shape(),
        });
    }
    if n > dense_cap {
        return Err(ProblemError::TooLarge { n, cap: dense_cap });
    }
    let lr = inst.laplacian.mul_dense(r);
    let lambda = row_dots(&lr, r);
    let diag_err: f64 = row_dots(r, r).iter().map(|s| (s - 1.0).powi(2)).sum::<f64>().sqrt();
    let resp = diag_err / (1.0 + (n as f64).sqrt());

    let trace = lr.dot(r);
    let lsum: f64 = lambda.iter().sum();
    let pdgap = (trace - lsum).abs() / (1.0 + trace.abs() + lsum.abs());

    let mut slack = -inst.laplacian.to_dense();
    for (i, l) in lambda.iter().enumerate() {
        slack[(i, i)] += l;
    }
    let eig = slack.symmetric_eigenvalues();
    let neg = eig.iter().filter(|&&e| e < 0.0).map(|e| e * e).sum::<f64>().sqrt();
    let resd = neg / (1.0 + inst.laplacian.frobenius_norm());

    Ok(KktResidue {
        resp,
        resd,
        pdgap,
        residue: resp.max(resd).max(pdgap),
        lambda,
    })
}

/// Connected component label of every vertex, numbered in order of each
/// component's smallest vertex.
fn components(n: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j, _) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = next;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

/// Erdős–Rényi graph with unit weights and the given expected average
/// degree, made connected by joining each extra component to a uniformly
/// chosen vertex of the earlier ones with one edge.
///
/// Redrawing until connected is hopeless at large `n`: about `n·e^{-d}`
/// vertices are isolated in a typical draw.
pub fn random_connected_graph(n: usize, avg_degree: f64, seed: u64) -> Vec<(usize, usize, f64)> {
    assert!(n >= 2, "a graph needs at least two vertices");
    let p = (avg_degree / (n - 1) as f64).min(1.0);
    let mut gen = rng::stream(seed, rng::STREAM_INSTANCE);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if gen.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let label = components(n, &edges);
    let count = label.iter().max().map_or(0, |&m| m + 1);
    let mut members = vec![Vec::new(); count];
    for (v, &c) in label.iter().enumerate() {
        members[c].push(v);
    }
    let mut joined = members[0].clone();
    for comp in &members[1..] {
        let u = comp[gen.random_range(0..comp.len())];
        let v = joined[gen.random_range(0..joined.len())];
        edges.push((u.min(v), u.max(v), 1.0));
        joined.extend_from_slice(comp);
    }
    edges
}
