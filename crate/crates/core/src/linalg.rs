//! Small dense helpers shared by the Gramian, resilience and LQ code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub(crate) fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.is_square() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Numerical rank with singular values below `rel_tol * sigma_max` treated as zero.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax).count()
}

/// Solves `A X + X Aᵀ = -C` through the Kronecker form
/// `(I ⊗ A + A ⊗ I) vec(X) = -vec(C)`.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a, "Lyapunov matrix")?;
    let n = a.nrows();
    if c.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "Lyapunov right-hand side is {}x{}, expected {n}x{n}",
            c.nrows(),
            c.ncols()
        )));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, c.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Lyapunov operator is singular".into()))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    check_finite(&x, "Lyapunov solution")?;
    Ok(symmetrize(&x))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// nonincreasing and eigenvectors permuted to match.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Solution of the symmetric-definite pencil `A x = λ B x`.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// Nonincreasing generalized eigenvalues.
    pub values: DVector<f64>,
    /// B-orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: DMatrix<f64>,
}

/// Solves `A x = λ B x` for symmetric `A` and symmetric positive definite `B`
/// by whitening with the Cholesky factor of `B`; `A` may be singular.
pub fn generalized_symmetric_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    check_square(a, "pencil matrix A")?;
    if b.shape() != a.shape() {
        return Err(Error::Dimension("pencil matrices differ in size".into()));
    }
    let chol = nalgebra::Cholesky::new(symmetrize(b))
        .ok_or_else(|| Error::Numerical("Cholesky factorization failed: matrix is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&symmetrize(a))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let (values, v) = sorted_symmetric_eigen(&symmetrize(&c));
    let vectors = l
        .tr_solve_lower_triangular(&v)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok(GeneralizedEigen { values, vectors })
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Dimension(format!("{what} has no rows")));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(Error::Dimension(format!("{what} has empty rows")));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Dimension(format!(
            "{what} is ragged: row {i} has {} entries, row 0 has {cols}",
            r.len()
        )));
    }
    let m = DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().cloned());
    check_finite(&m, what)?;
    Ok(m)
}
