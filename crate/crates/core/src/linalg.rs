//! Dense linear algebra for small symmetric positive definite matrices.
//!
//! Cholesky is the only factorization: it is the positive-definiteness
//! test, the solver and the log-determinant.

use crate::error::{Error, Result};

/// Smallest admissible Cholesky pivot on the unit-diagonal scale.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix whose entries satisfy `m[i][j] == m[j][i]` bit for bit.
///
/// Every mutation writes both triangles, so symmetry cannot drift.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    pub fn identity(dim: usize) -> Self {
        Self {
            inner: Matrix::identity(dim),
        }
    }

    /// Builds a symmetric matrix, evaluating `f` on the upper triangle only.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                inner[(i, j)] = v;
                inner[(j, i)] = v;
            }
        }
        Self { inner }
    }

    /// Accepts a square matrix that is already exactly symmetric.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::invalid(format!(
                "expected a square matrix, got {}x{}",
                m.rows, m.cols
            )));
        }
        for i in 0..m.rows {
            for j in (i + 1)..m.cols {
                if m[(i, j)].to_bits() != m[(j, i)].to_bits() {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { inner: m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(Error::invalid("expected a square matrix"));
        }
        Self::from_matrix(Matrix::from_rows(rows))
    }

    /// Symmetrizes `(m + m^T) / 2`.
    pub fn symmetrize(m: &Matrix) -> Self {
        assert_eq!(m.rows, m.cols);
        Self::from_upper(m.rows, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Writes `v` to both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    /// Principal submatrix on `idx`, in the given order.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        Self::from_upper(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Rectangular block with rows `rows` and columns `cols`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |a, b| self.get(rows[a], cols[b]))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    lower: Matrix,
}

impl CholFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// `2 * sum(log L_ii)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `A X = rhs` by forward and back substitution.
    pub fn solve(&self, rhs: &Matrix) -> Matrix {
        let n = self.dim();
        assert_eq!(rhs.rows, n, "right-hand side has wrong row count");
        let l = &self.lower;
        let mut x = rhs.clone();
        for c in 0..rhs.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= l[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in (i + 1)..n {
                    s -= l[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = s / l[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> SymMatrix {
        SymMatrix::symmetrize(&self.solve(&Matrix::identity(self.dim())))
    }

    /// `L L^T`, for reconstruction checks.
    pub fn reconstruct(&self) -> Matrix {
        self.lower.matmul(&self.lower.transpose())
    }
}

/// Cholesky factorization. Fails when a pivot (the diagonal value before
/// the square root) is not strictly greater than `pivot_tol`.
pub fn cholesky(m: &SymMatrix, pivot_tol: f64) -> Result<CholFactor> {
    let n = m.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // negated comparison also rejects NaN
        if d.is_nan() || d <= pivot_tol {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(CholFactor { lower: l })
}

/// Solves `c X = rhs` for positive definite `c`.
pub fn solve_spd(c: &SymMatrix, rhs: &Matrix) -> Result<Matrix> {
    Ok(cholesky(c, DEFAULT_PIVOT_TOL)?.solve(rhs))
}

/// `m / C = A - B C^-1 B^T`, where `C` is the principal block on `block`
/// and `A` the principal block on the remaining indices (ascending order).
pub fn schur_complement(m: &SymMatrix, block: &[usize]) -> Result<SymMatrix> {
    let rest: Vec<usize> = (0..m.dim()).filter(|i| !block.contains(i)).collect();
    schur_complement_on(m, &rest, block)
}

/// Schur complement of the `cond` block within the principal submatrix on
/// `keep ∪ cond`; the result is indexed like `keep`.
pub fn schur_complement_on(m: &SymMatrix, keep: &[usize], cond: &[usize]) -> Result<SymMatrix> {
    let a = m.principal(keep);
    if cond.is_empty() {
        return Ok(a);
    }
    let c = cholesky(&m.principal(cond), DEFAULT_PIVOT_TOL)?;
    let bt = m.block(cond, keep);
    let cinv_bt = c.solve(&bt);
    let correction = bt.transpose().matmul(&cinv_bt);
    Ok(SymMatrix::from_upper(keep.len(), |i, j| {
        a.get(i, j) - correction[(i, j)]
    }))
}

/// `log det m` from the Cholesky factor.
pub fn log_det(m: &SymMatrix) -> Result<f64> {
    Ok(cholesky(m, DEFAULT_PIVOT_TOL)?.log_det())
}

/// Inverse of a positive definite matrix.
pub fn inverse_spd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(cholesky(m, DEFAULT_PIVOT_TOL)?.inverse())
}
