use nalgebra::{Cholesky, SymmetricEigen, SVD};

use super::Matrix;
use crate::{DadlError, Result};

const SVD_MAX_ITERS: usize = 10_000;

/// Thin singular value decomposition `m = u * diag(s) * vt`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x k`, orthonormal columns.
    pub u: Matrix,
    /// Descending, non-negative, length `k = min(rows, cols)`.
    pub s: Vec<f64>,
    /// `k x cols`, orthonormal rows.
    pub vt: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (v, s) in us.row_mut(i).iter_mut().zip(&self.s) {
                *v *= s;
            }
        }
        us.matmul(&self.vt).expect("svd factors are conformant")
    }
}

/// Thin SVD backed by Golub-Kahan bidiagonalization.
///
/// Singular values come back sorted descending. Each left singular vector is
/// sign-flipped so its largest-magnitude entry is positive (the matching row
/// of `vt` is flipped with it).
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    if !m.all_finite() {
        return Err(DadlError::Contract("svd input has non-finite entries".into()));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let dec = SVD::try_new(m.to_nalgebra(), true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(DadlError::SolverFailure { rows, cols })?;
    let (Some(u_na), Some(vt_na)) = (dec.u, dec.v_t) else {
        return Err(DadlError::SolverFailure { rows, cols });
    };

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .partial_cmp(&dec.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut u = Matrix::zeros(rows, k);
    let mut vt = Matrix::zeros(k, cols);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut sign = 1.0;
        let mut best = -1.0;
        for i in 0..rows {
            let v = u_na[(i, src)];
            if v.abs() > best {
                best = v.abs();
                sign = if v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for i in 0..rows {
            u.set(i, dst, sign * u_na[(i, src)]);
        }
        for j in 0..cols {
            vt.set(dst, j, sign * vt_na[(src, j)]);
        }
        s.push(dec.singular_values[src].max(0.0));
    }
    Ok(SvdResult { u, s, vt })
}

fn check_symmetric(a: &Matrix, what: &str) -> Result<()> {
    let (r, c) = a.shape();
    if r != c {
        return Err(DadlError::dims(format!("{what} must be square"), format!("{r}x{r}"), format!("{r}x{c}")));
    }
    let tol = 1e-10 * a.max_abs().max(1.0);
    for i in 0..r {
        for j in (i + 1)..r {
            if (a.get(i, j) - a.get(j, i)).abs() > tol {
                return Err(DadlError::Contract(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Solve `a * x = b` for symmetric positive-definite `a` by Cholesky.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_symmetric(a, "solve_spd system matrix")?;
    if b.rows() != a.rows() {
        return Err(DadlError::dims("solve_spd right-hand side rows", a.rows(), b.rows()));
    }
    let chol = Cholesky::new(a.to_nalgebra()).ok_or_else(|| {
        DadlError::NotPositiveDefinite(format!("Cholesky failed on {}x{} system", a.rows(), a.cols()))
    })?;
    let x = chol.solve(&b.to_nalgebra());
    let out = Matrix::from_nalgebra(&x);
    if !out.all_finite() {
        return Err(DadlError::NotPositiveDefinite("solution is not finite".into()));
    }
    Ok(out)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
/// Eigenvectors are the columns of the returned matrix, sign-normalized so
/// their largest-magnitude entry is positive.
pub(crate) fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_symmetric(a, "symmetric_eigen input")?;
    let n = a.rows();
    let dec = SymmetricEigen::try_new(a.to_nalgebra(), f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(DadlError::SolverFailure { rows: n, cols: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        dec.eigenvalues[y]
            .partial_cmp(&dec.eigenvalues[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.cmp(&y))
    });
    let mut vecs = Matrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let col = dec.eigenvectors.column(src);
        let (mut best, mut sign) = (-1.0, 1.0);
        for v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = if *v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for i in 0..n {
            vecs.set(i, dst, sign * col[i]);
        }
        vals.push(dec.eigenvalues[src]);
    }
    Ok((vals, vecs))
}
