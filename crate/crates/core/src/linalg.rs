//! Small dense linear-algebra helpers shared by the manifolds and problems.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_RTOL: f64 = 1e-10;

/// Frobenius inner product `tr(A Bᵀ)`.
#[inline]
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Symmetric part `(A + Aᵀ)/2` of a square matrix.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// `y += a · x`.
pub fn axpy(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>) {
    y.zip_apply(x, |yi, xi| *yi += a * xi);
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Numerical rank with threshold `RANK_RTOL · σ_max`.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.singular_values();
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_RTOL * smax)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(keep.iter())
}

/// Minimum-norm least-squares solution of `a x = b` using a rank-revealing SVD.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (_, cols) = a.shape();
    if a.is_empty() {
        return DVector::zeros(cols);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return DVector::zeros(cols);
    }
    svd.solve(b, RANK_RTOL * smax)
        .unwrap_or_else(|_| DVector::zeros(cols))
}

/// Unit vector `λ` minimizing `‖λᵀ A‖`, together with the singular-value
/// profile of `A` (`σ_min`, `σ_max`). Rows of `A` index the vector.
///
/// When `A` has more rows than columns it is padded with zero columns so the
/// full left singular basis is available.
pub fn smallest_left_singular(a: &DMatrix<f64>) -> (DVector<f64>, f64, f64) {
    let (rows, cols) = a.shape();
    let square = if cols < rows {
        let mut p = DMatrix::zeros(rows, rows);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = square.svd(true, false);
    let u = svd.u.expect("requested U");
    let sv = &svd.singular_values;
    // Thin SVD of a wide matrix keeps min(rows, cols) = rows columns of U.
    let (mut imin, mut smin) = (0, f64::INFINITY);
    let mut smax = 0.0_f64;
    for (i, &s) in sv.iter().enumerate() {
        smax = smax.max(s);
        if s < smin {
            smin = s;
            imin = i;
        }
    }
    (u.column(imin).into_owned(), smin, smax)
}

/// General tridiagonal matrix with a precomputed LU factorization (Thomas
/// algorithm without pivoting; intended for diagonally dominant or SPD input).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    // Factorization: modified super-diagonal and pivots.
    c_prime: Vec<f64>,
    pivots: Vec<f64>,
}

impl Tridiagonal {
    /// `sub` and `sup` have length `n - 1`.
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        let n = diag.len();
        assert!(n >= 1, "empty tridiagonal system");
        assert_eq!(sub.len(), n - 1);
        assert_eq!(sup.len(), n - 1);
        let mut c_prime = vec![0.0; n.saturating_sub(1)];
        let mut pivots = vec![0.0; n];
        pivots[0] = diag[0];
        for i in 1..n {
            c_prime[i - 1] = sup[i - 1] / pivots[i - 1];
            pivots[i] = diag[i] - sub[i - 1] * c_prime[i - 1];
        }
        Self {
            sub,
            diag,
            sup,
            c_prime,
            pivots,
        }
    }

    /// The 1D Dirichlet Laplacian stencil: 2 on the diagonal, -1 off it.
    pub fn laplacian_1d(n: usize) -> Self {
        Self::new(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1])
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut y = vec![0.0; n];
        y[0] = rhs[0] / self.pivots[0];
        for i in 1..n {
            y[i] = (rhs[i] - self.sub[i - 1] * y[i - 1]) / self.pivots[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= self.c_prime[i] * y[i + 1];
        }
        y
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `T · X` for a dense `n × p` matrix.
    pub fn mul_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.len();
        assert_eq!(x.nrows(), n);
        let mut out = DMatrix::zeros(n, x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            for i in 0..n {
                let mut s = self.diag[i] * col[i];
                if i > 0 {
                    s += self.sub[i - 1] * col[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * col[i + 1];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i == j + 1 {
                self.sub[j]
            } else if j == i + 1 {
                self.sup[i]
            } else {
                0.0
            }
        })
    }
}
