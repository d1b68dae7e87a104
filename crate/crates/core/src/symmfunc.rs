//! Elementary symmetric functions of symmetric matrices and their
//! k-cofactor matrices.
//!
//! For an `N×N` symmetric matrix `A` with eigenvalues `λ_1..λ_N`,
//! `S_k(A)` is the k-th elementary symmetric polynomial of the eigenvalues
//! (`S_0 = 1`, `S_1 = trace`, `S_N = det`). The k-cofactor matrix has
//! entries `∂S_k/∂a_ij` where the `N²` entries are treated as independent
//! variables; for `k = N` it is the classical adjugate.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest supported matrix size.
pub const MAX_DIM: usize = 8;

/// Dense symmetric matrix. Symmetry is exact: every constructor mirrors
/// the upper triangle onto the lower one.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix { m: DMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        SymMatrix { m: DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }) }
    }

    /// Builds the matrix from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    /// Takes the symmetric part `(M + Mᵀ)/2` of a square matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::domain(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// Row-major nested rows; rejects ragged or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("matrix rows are ragged or not square"));
        }
        let scale = rows.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::domain(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.m.clone().try_inverse().ok_or(Error::Singular)?;
        Self::from_matrix(&inv)
    }

    pub fn scale(&self, s: f64) -> Self {
        SymMatrix { m: &self.m * s }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> Self {
        SymMatrix { m: &self.m * a + &other.m * b }
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(v.len(), n);
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.m[(i, j)] * v[j];
            }
            s += v[i] * row;
        }
        s
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.m[(i, j)] * v[j]).sum()).collect()
    }

    /// Entrywise contraction `Σ_ij a_ij b_ij`.
    pub fn contract(&self, other: &SymMatrix) -> f64 {
        self.m.component_mul(&other.m).sum()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.m - &other.m).amax()
    }

    pub fn elem_sym(&self, k: usize) -> Result<f64> {
        elem_sym(self, k)
    }

    pub fn cofactor(&self, k: usize) -> Result<SymMatrix> {
        cofactor_matrix(self, k)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> =
            (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect()).collect();
        f.debug_tuple("SymMatrix").field(&rows).finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::domain(format!("matrix size {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Sum of the k×k principal minors of a square matrix. Equals the k-th
/// elementary symmetric function of its eigenvalues.
pub(crate) fn principal_minor_sum(m: &DMatrix<f64>, k: usize) -> f64 {
    let n = m.nrows();
    if k == 0 {
        return 1.0;
    }
    if k == 1 {
        return m.trace();
    }
    if k == n {
        return m.determinant();
    }
    let mut total = 0.0;
    let mut idx = Vec::with_capacity(k);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        idx.clear();
        idx.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        let sub = DMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])]);
        total += sub.determinant();
    }
    total
}

/// k-th elementary symmetric function of the eigenvalues, `0 ≤ k ≤ N`.
pub fn elem_sym(a: &SymMatrix, k: usize) -> Result<f64> {
    let n = a.dim();
    check_dim(n)?;
    if k > n {
        return Err(Error::domain(format!("S_{k} undefined for {n}x{n} matrix")));
    }
    Ok(principal_minor_sum(&a.m, k))
}

/// All of `S_0(A), …, S_N(A)`.
pub fn elem_sym_all(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.dim();
    check_dim(n)?;
    Ok((0..=n).map(|k| principal_minor_sum(&a.m, k)).collect())
}

/// k-cofactor matrix `(∂S_k/∂a_ij)`, `1 ≤ k ≤ N`, via the Newton tensors
/// `T_0 = I`, `T_j = S_j·I − T_{j−1}·A`; the result is `T_{k−1}`.
pub fn cofactor_matrix(a: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = a.dim();
    check_dim(n)?;
    if k == 0 || k > n {
        return Err(Error::domain(format!("cofactor order {k} outside 1..={n}")));
    }
    let mut t = DMatrix::<f64>::identity(n, n);
    for j in 1..k {
        let s = principal_minor_sum(&a.m, j);
        t = DMatrix::identity(n, n) * s - &t * &a.m;
    }
    SymMatrix::from_matrix(&t)
}

/// Like [`cofactor_matrix`] but returns the zero matrix for `k = 0`
/// (`S_0` is constant).
pub(crate) fn cofactor_or_zero(a: &SymMatrix, k: usize) -> Result<SymMatrix> {
    if k == 0 {
        Ok(SymMatrix::zeros(a.dim()))
    } else {
        cofactor_matrix(a, k)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b.round()
}
