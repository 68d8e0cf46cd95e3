use super::{converged, largest_residual_column, sample_atoms};
use crate::numerics::{dot, norm, svd, Matrix};
use crate::sparse_coding::{omp_encode, Dictionary, SparseCode};
use crate::{DadlError, Result};

#[derive(Debug, Clone)]
pub struct CommonDictResult {
    pub d_common: Dictionary,
    /// Codes of the source columns.
    pub z_source: SparseCode,
    /// Codes of the target columns.
    pub z_target: SparseCode,
    /// `‖X_s − D^C Z⁰‖² + ‖X_t − D^C Z^t‖²` after the initial coding and after
    /// each iteration.
    pub objective_trace: Vec<f64>,
}

/// Learn the common dictionary shared by source and target.
///
/// The two reconstruction terms only share `D^C`, so the problem is plain
/// K-SVD on `[x_s | x_t]`; codes are split back afterwards.
pub fn learn_common(
    x_s: &Matrix,
    x_t: &Matrix,
    n: usize,
    t: usize,
    iters: usize,
    seed: u64,
) -> Result<CommonDictResult> {
    if x_s.rows() != x_t.rows() {
        return Err(DadlError::dims("learn_common feature dimension", x_s.rows(), x_t.rows()));
    }
    let total = x_s.cols() + x_t.cols();
    if n == 0 || n > total {
        return Err(DadlError::Parameter(format!(
            "atom count {n} must be in 1..={total}"
        )));
    }
    let x = x_s.hstack(x_t)?;
    let (d_common, codes, objective_trace) = ksvd(&x, n, t, iters, seed)?;
    let ns = x_s.cols();
    let coeffs = codes.coeffs();
    Ok(CommonDictResult {
        d_common,
        z_source: SparseCode::new(coeffs.col_range(0, ns), t)?,
        z_target: SparseCode::new(coeffs.col_range(ns, total), t)?,
        objective_trace,
    })
}

/// Classic K-SVD: OMP coding followed by rank-1 SVD updates of each atom on
/// its restricted residual.
pub(crate) fn ksvd(
    x: &Matrix,
    n: usize,
    t: usize,
    iters: usize,
    seed: u64,
) -> Result<(Dictionary, SparseCode, Vec<f64>)> {
    let mut rng = crate::rng::seeded(seed);
    let mut dict = sample_atoms(x, n, &mut rng)?;
    let mut codes = omp_encode(&dict, x, t)?.into_matrix();
    let mut residual = x.sub(&dict.atoms().matmul(&codes)?)?;
    let mut trace = vec![residual.frobenius_sq()];

    for _ in 0..iters {
        let mut atoms = dict.into_matrix();
        let mut used = vec![false; x.cols()];
        for j in 0..n {
            let omega: Vec<usize> = (0..x.cols()).filter(|&c| codes.get(j, c) != 0.0).collect();
            if omega.is_empty() {
                // Dead atom: restart it on the worst-represented sample.
                if let Some(c) = largest_residual_column(&residual, &used) {
                    used[c] = true;
                    let col = residual.col(c);
                    let nrm = norm(&col);
                    atoms.set_col(j, &col.iter().map(|v| v / nrm).collect::<Vec<_>>());
                }
                continue;
            }
            let atom = atoms.col(j);
            let mut err = residual.select_cols(&omega);
            for i in 0..err.rows() {
                for (k, &c) in omega.iter().enumerate() {
                    let v = err.get(i, k) + atom[i] * codes.get(j, c);
                    err.set(i, k, v);
                }
            }
            let (u1, coefs) = leading_pair(&err, &atom)?;
            atoms.set_col(j, &u1);
            for (k, &c) in omega.iter().enumerate() {
                let coef = coefs[k];
                codes.set(j, c, coef);
                for i in 0..err.rows() {
                    residual.set(i, c, err.get(i, k) - u1[i] * coef);
                }
            }
        }
        dict = Dictionary::normalized(atoms)?;

        // Take the fresh OMP codes unless they raise the total objective; in
        // that case each column keeps whichever of its two codes fits better.
        let fresh = omp_encode(&dict, x, t)?.into_matrix();
        let fresh_res = x.sub(&dict.atoms().matmul(&fresh)?)?;
        let old_res = x.sub(&dict.atoms().matmul(&codes)?)?;
        let (fresh_norms, old_norms) = (fresh_res.column_norms(), old_res.column_norms());
        let total = |v: &[f64]| v.iter().map(|r| r * r).sum::<f64>();
        if total(&fresh_norms) <= total(&old_norms) {
            codes = fresh;
            residual = fresh_res;
        } else {
            residual = old_res;
            for c in 0..x.cols() {
                if fresh_norms[c] <= old_norms[c] {
                    codes.set_col(c, &fresh.col(c));
                    residual.set_col(c, &fresh_res.col(c));
                }
            }
        }
        let obj = residual.frobenius_sq();
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if converged(prev, obj) {
            break;
        }
    }
    Ok((dict, SparseCode::new(codes, t)?, trace))
}

/// Power-iteration cap for [`leading_pair`] before falling back to a full SVD.
const POWER_ITERS: usize = 500;
const POWER_TOL: f64 = 1e-15;

/// Leading left singular vector `u` of `e` and `eᵀu` (= `σ₁ v₁`).
///
/// Power iteration on `e eᵀ` warm-started from `start`; the Rayleigh quotient
/// `‖eᵀu‖²` never decreases along the iteration, so the rank-1 error is never
/// worse than that of `start`. Falls back to a full SVD when the spectral gap
/// is too small to converge within the cap.
pub(crate) fn leading_pair(e: &Matrix, start: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let et = e.transpose();
    let mut u = start.to_vec();
    let mut v = et.matvec(&u)?;
    let mut rq = dot(&v, &v);
    if rq <= f64::MIN_POSITIVE {
        return exact_pair(e);
    }
    for _ in 0..POWER_ITERS {
        let w = e.matvec(&v)?;
        let wn = norm(&w);
        let cand: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let cv = et.matvec(&cand)?;
        let crq = dot(&cv, &cv);
        let done = crq - rq <= POWER_TOL * crq;
        if crq >= rq {
            (u, v, rq) = (cand, cv, crq);
        }
        if done {
            return Ok((u, v));
        }
    }
    let (eu, ev) = exact_pair(e)?;
    if dot(&ev, &ev) >= rq {
        Ok((eu, ev))
    } else {
        Ok((u, v))
    }
}

fn exact_pair(e: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let dec = svd(e)?;
    let s1 = dec.s[0];
    Ok((dec.u.col(0), dec.vt.row(0).iter().map(|v| v * s1).collect()))
}
