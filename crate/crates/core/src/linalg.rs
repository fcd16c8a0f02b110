//! Dense symmetric matrices and the cyclic Jacobi eigenvalue method.

use serde::Serialize;

/// Dense symmetric matrix, stored in full so that rotations stay simple.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// Builds the matrix from its upper triangle; `f(i, j)` is called for `i <= j` only.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Returns `None` unless `rows` is square and symmetric within `tol`.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > tol {
                    return None;
                }
            }
        }
        Some(Self::from_upper(n, |i, j| rows[i][j]))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_upper(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymMatrix { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Principal submatrix on the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_upper(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// Eigen-decomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 100;
/// Relative off-diagonal threshold that ends the sweeps.
pub const JACOBI_TOL: f64 = 1e-12;

/// Cyclic Jacobi rotations in row order until the off-diagonal norm drops
/// below `JACOBI_TOL * ||m||_F`.
pub fn jacobi_eigen(m: &SymMatrix) -> SymEigen {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = SymMatrixFull::identity(n);
    let target = JACOBI_TOL * m.frobenius_norm();
    let mut sweeps = 0;

    while sweeps < MAX_SWEEPS && a.off_diagonal_norm() > target {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a.get(p, p), a.get(q, q));
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (g, h) = (a.get(r, p), a.get(r, q));
                    a.set(r, p, g - s * (h + g * tau));
                    a.set(r, q, h + s * (g - h * tau));
                }
                for r in 0..n {
                    let (g, h) = (v.get(r, p), v.get(r, q));
                    v.set(r, p, g - s * (h + g * tau));
                    v.set(r, q, h + s * (g - h * tau));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)).then(i.cmp(&j)));
    SymEigen {
        values: order.iter().map(|&k| a.get(k, k)).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|r| v.get(r, k)).collect()).collect(),
        sweeps,
    }
}

/// Smallest eigenvalue by cyclic Jacobi.
pub fn least_eigenvalue(m: &SymMatrix) -> f64 {
    jacobi_eigen(m).values.first().copied().unwrap_or(f64::INFINITY)
}

/// Leading principal minors by Gaussian elimination without pivoting:
/// the k-th minor is the product of the first k pivots.
pub fn leading_principal_minors(m: &SymMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.rows();
    let mut minors = Vec::with_capacity(n);
    let mut det = 1.0;
    for k in 0..n {
        let pivot = a[k][k];
        det *= pivot;
        minors.push(det);
        if pivot == 0.0 {
            // Later minors cannot be obtained without pivoting; report them as
            // non-positive so the criterion fails.
            minors.resize(n, 0.0);
            break;
        }
        for i in (k + 1)..n {
            let f = a[i][k] / pivot;
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    minors
}

/// Sylvester's criterion: all leading principal minors positive.
pub fn sylvester_positive_definite(m: &SymMatrix) -> bool {
    leading_principal_minors(m).iter().all(|&d| d > 0.0)
}

// Non-symmetric scratch storage for the accumulated rotations.
struct SymMatrixFull {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrixFull {
    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SymMatrixFull { n, data }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }
}
