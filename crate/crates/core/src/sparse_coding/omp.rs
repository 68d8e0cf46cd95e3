use rayon::prelude::*;

use super::{Dictionary, JointCodePair, SparseCode};
use crate::numerics::{solve_spd, Matrix};
use crate::{DadlError, Result};

/// A column's pursuit stops once its residual norm drops below this.
pub(crate) const RESIDUAL_TOL: f64 = 1e-12;
/// Relative floor under which the best correlation counts as zero.
const CORRELATION_TOL: f64 = 1e-14;
/// Diagonal jitter for near-singular normal equations.
const GRAM_JITTER: f64 = 1e-12;

/// Precomputed normal-equation view of a coding problem: the Gram matrix of
/// the (possibly stacked) dictionary, the atom/signal correlations, and an
/// exact residual evaluator.
pub(crate) trait CodingSystem: Sync {
    fn gram(&self) -> &Matrix;
    fn correlations(&self) -> &Matrix;
    fn signal_sq_norm(&self, col: usize) -> f64;
    fn residual_sq_norm(&self, col: usize, support: &[usize], coeffs: &[f64]) -> f64;

    fn n_atoms(&self) -> usize {
        self.gram().rows()
    }

    fn n_signals(&self) -> usize {
        self.correlations().cols()
    }
}

struct SingleSystem<'a> {
    atoms: &'a Matrix,
    x: &'a Matrix,
    gram: Matrix,
    corr: Matrix,
    sq_norms: Vec<f64>,
}

impl<'a> SingleSystem<'a> {
    fn new(dict: &'a Dictionary, x: &'a Matrix) -> Result<Self> {
        let atoms = dict.atoms();
        Ok(Self {
            atoms,
            x,
            gram: atoms.t_matmul(atoms)?,
            corr: atoms.t_matmul(x)?,
            sq_norms: x.column_norms().iter().map(|v| v * v).collect(),
        })
    }
}

impl CodingSystem for SingleSystem<'_> {
    fn gram(&self) -> &Matrix {
        &self.gram
    }

    fn correlations(&self) -> &Matrix {
        &self.corr
    }

    fn signal_sq_norm(&self, col: usize) -> f64 {
        self.sq_norms[col]
    }

    fn residual_sq_norm(&self, col: usize, support: &[usize], coeffs: &[f64]) -> f64 {
        (0..self.x.rows())
            .map(|i| {
                let row = self.atoms.row(i);
                let fit: f64 = support.iter().zip(coeffs).map(|(&s, &c)| row[s] * c).sum();
                let r = self.x.get(i, col) - fit;
                r * r
            })
            .sum()
    }
}

/// The stacked system `X̃ = D̃ [Γ; Z]` where block `i` of `D̃` is
/// `[specifics[i] | common]` and block `i` of `X̃` is `signals[i]`.
/// Atom indices `0..n_s` address the specific block, `n_s..n_s+n_c` the
/// common one.
pub(crate) struct StackedSystem<'a> {
    common: &'a Matrix,
    specifics: Vec<&'a Matrix>,
    signals: Vec<&'a Matrix>,
    gram: Matrix,
    corr: Matrix,
    sq_norms: Vec<f64>,
}

impl<'a> StackedSystem<'a> {
    pub(crate) fn new(
        common: &'a Dictionary,
        specifics: &[&'a Dictionary],
        signals: &[&'a Matrix],
    ) -> Result<Self> {
        if specifics.is_empty() {
            return Err(DadlError::Contract("joint coding needs at least one block".into()));
        }
        if specifics.len() != signals.len() {
            return Err(DadlError::dims(
                "joint coding block count",
                specifics.len(),
                signals.len(),
            ));
        }
        let d = common.dim();
        let n_s = specifics[0].len();
        let n_sig = signals[0].cols();
        for (i, (s, x)) in specifics.iter().zip(signals).enumerate() {
            if s.dim() != d || s.len() != n_s {
                return Err(DadlError::dims(
                    format!("joint coding block {i} dictionary"),
                    format!("{d}x{n_s}"),
                    format!("{}x{}", s.dim(), s.len()),
                ));
            }
            if x.rows() != d || x.cols() != n_sig {
                return Err(DadlError::dims(
                    format!("joint coding block {i} signal"),
                    format!("{d}x{n_sig}"),
                    format!("{}x{}", x.rows(), x.cols()),
                ));
            }
        }

        let c = common.atoms();
        let n_c = c.cols();
        let m = specifics.len() as f64;

        let mut ss = Matrix::zeros(n_s, n_s);
        let mut s_sum = Matrix::zeros(d, n_s);
        let mut x_sum = Matrix::zeros(d, n_sig);
        let mut corr_top = Matrix::zeros(n_s, n_sig);
        for (s, x) in specifics.iter().zip(signals) {
            let s = s.atoms();
            ss = ss.add(&s.t_matmul(s)?)?;
            s_sum = s_sum.add(s)?;
            x_sum = x_sum.add(x)?;
            corr_top = corr_top.add(&s.t_matmul(x)?)?;
        }
        let sc = s_sum.t_matmul(c)?;
        let cc = c.t_matmul(c)?.scale(m);
        let corr_bottom = c.t_matmul(&x_sum)?;

        let k = n_s + n_c;
        let gram = Matrix::from_fn(k, k, |i, j| match (i < n_s, j < n_s) {
            (true, true) => ss.get(i, j),
            (true, false) => sc.get(i, j - n_s),
            (false, true) => sc.get(j, i - n_s),
            (false, false) => cc.get(i - n_s, j - n_s),
        });
        let corr = Matrix::vstack(&[&corr_top, &corr_bottom])?;

        let mut sq_norms = vec![0.0; n_sig];
        for x in signals {
            for (acc, v) in sq_norms.iter_mut().zip(x.column_norms()) {
                *acc += v * v;
            }
        }

        Ok(Self {
            common: c,
            specifics: specifics.iter().map(|s| s.atoms()).collect(),
            signals: signals.to_vec(),
            gram,
            corr,
            sq_norms,
        })
    }

    pub(crate) fn n_specific(&self) -> usize {
        self.specifics[0].cols()
    }
}

impl CodingSystem for StackedSystem<'_> {
    fn gram(&self) -> &Matrix {
        &self.gram
    }

    fn correlations(&self) -> &Matrix {
        &self.corr
    }

    fn signal_sq_norm(&self, col: usize) -> f64 {
        self.sq_norms[col]
    }

    fn residual_sq_norm(&self, col: usize, support: &[usize], coeffs: &[f64]) -> f64 {
        let n_s = self.n_specific();
        let mut total = 0.0;
        for (spec, x) in self.specifics.iter().zip(&self.signals) {
            for i in 0..x.rows() {
                let (srow, crow) = (spec.row(i), self.common.row(i));
                let fit: f64 = support
                    .iter()
                    .zip(coeffs)
                    .map(|(&s, &c)| c * if s < n_s { srow[s] } else { crow[s - n_s] })
                    .sum();
                let r = x.get(i, col) - fit;
                total += r * r;
            }
        }
        total
    }
}

/// One column of batch OMP.
pub(crate) struct ColumnCode {
    /// Selected atoms, in selection order.
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    /// Residual norm before any selection and after each one.
    pub residual_trace: Vec<f64>,
}

fn refit(gram: &Matrix, b: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let g = Matrix::from_fn(k, k, |i, j| gram.get(support[i], support[j]));
    let rhs = Matrix::from_fn(k, 1, |i, _| b[support[i]]);
    if let Ok(sol) = solve_spd(&g, &rhs) {
        return Some(sol.col(0));
    }
    let diag_scale = (0..k).fold(1.0f64, |m, i| m.max(g.get(i, i)));
    let jittered = g.add(&Matrix::identity(k).scale(GRAM_JITTER * diag_scale)).ok()?;
    solve_spd(&jittered, &rhs).ok().map(|s| s.col(0))
}

pub(crate) fn omp_column<S: CodingSystem + ?Sized>(sys: &S, col: usize, t: usize) -> ColumnCode {
    let gram = sys.gram();
    let k = sys.n_atoms();
    let b: Vec<f64> = (0..k).map(|j| sys.correlations().get(j, col)).collect();
    let x_norm = sys.signal_sq_norm(col).sqrt();

    let mut out = ColumnCode {
        support: Vec::with_capacity(t),
        coeffs: Vec::with_capacity(t),
        residual_trace: vec![x_norm],
    };
    if x_norm < RESIDUAL_TOL {
        return out;
    }
    let mut selected = vec![false; k];
    for _ in 0..t {
        let mut best = None;
        let mut best_abs = 0.0;
        for j in 0..k {
            if selected[j] {
                continue;
            }
            let g = gram.row(j);
            let fitted: f64 = out.support.iter().zip(&out.coeffs).map(|(&s, &c)| g[s] * c).sum();
            let c = (b[j] - fitted).abs();
            if c > best_abs {
                best_abs = c;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if best_abs <= CORRELATION_TOL * x_norm {
            break;
        }
        selected[j] = true;
        out.support.push(j);
        match refit(gram, &b, &out.support) {
            Some(c) => out.coeffs = c,
            None => {
                out.support.pop();
                break;
            }
        }
        let r = residual_norm(sys, col, &b, &out.support, &out.coeffs);
        out.residual_trace.push(r);
        if r < RESIDUAL_TOL {
            break;
        }
    }
    out
}

/// Below this fraction of `‖x‖²` the Gram-form residual is recomputed
/// explicitly to avoid cancellation.
const EXPLICIT_RESIDUAL_FRACTION: f64 = 1e-6;

/// `‖x − D_S c‖` from `‖x‖² − 2bᵀc + cᵀG c`, explicit when small.
fn residual_norm<S: CodingSystem + ?Sized>(sys: &S, col: usize, b: &[f64], support: &[usize], coeffs: &[f64]) -> f64 {
    let x2 = sys.signal_sq_norm(col);
    let gram = sys.gram();
    let mut quad = 0.0;
    let mut lin = 0.0;
    for (&i, &ci) in support.iter().zip(coeffs) {
        lin += b[i] * ci;
        let row = gram.row(i);
        quad += ci * support.iter().zip(coeffs).map(|(&j, &cj)| row[j] * cj).sum::<f64>();
    }
    let r2 = x2 - 2.0 * lin + quad;
    if r2 <= EXPLICIT_RESIDUAL_FRACTION * x2 {
        sys.residual_sq_norm(col, support, coeffs).max(0.0).sqrt()
    } else {
        r2.sqrt()
    }
}

/// Single-column OMP against a plain dictionary, keeping the residual trace.
#[cfg(test)]
pub(crate) fn omp_column_trace(dict: &Dictionary, x: &Matrix, col: usize, t: usize) -> Result<ColumnCode> {
    let sys = SingleSystem::new(dict, x)?;
    Ok(omp_column(&sys, col, t))
}

fn code_all<S: CodingSystem>(sys: &S, t: usize) -> Result<SparseCode> {
    let columns: Vec<ColumnCode> = (0..sys.n_signals())
        .into_par_iter()
        .map(|c| omp_column(sys, c, t))
        .collect();
    let mut coeffs = Matrix::zeros(sys.n_atoms(), sys.n_signals());
    for (c, code) in columns.iter().enumerate() {
        for (&s, &v) in code.support.iter().zip(&code.coeffs) {
            coeffs.set(s, c, v);
        }
    }
    SparseCode::new(coeffs, t)
}

fn check_sparsity(t: usize, n: usize) -> Result<()> {
    if t == 0 || t > n {
        return Err(DadlError::Parameter(format!(
            "sparsity {t} must be in 1..={n}"
        )));
    }
    Ok(())
}

/// Batch OMP: code each column of `x` with at most `t` atoms of `dict`.
///
/// Each step picks the unselected atom with the largest absolute correlation
/// to the current residual (ties go to the smallest index), then refits all
/// selected coefficients by least squares. A column stops early once its
/// residual norm falls below `1e-12`.
pub fn omp_encode(dict: &Dictionary, x: &Matrix, t: usize) -> Result<SparseCode> {
    check_sparsity(t, dict.len())?;
    if x.rows() != dict.dim() {
        return Err(DadlError::dims("omp_encode signal rows", dict.dim(), x.rows()));
    }
    code_all(&SingleSystem::new(dict, x)?, t)
}

/// Multi-domain joint coding with one shared code per column.
///
/// Block `i` pairs `signals[i]` with the dictionary `[specifics[i] | common]`.
/// All blocks are stacked vertically and coded together, so the same
/// `(Γ, Z)` reconstructs every block, under a joint budget
/// `‖γ_i‖₀ + ‖z_i‖₀ ≤ t`.
pub fn joint_encode(
    common: &Dictionary,
    specifics: &[&Dictionary],
    signals: &[&Matrix],
    t: usize,
) -> Result<JointCodePair> {
    let sys = StackedSystem::new(common, specifics, signals)?;
    let n_s = sys.n_specific();
    check_sparsity(t, n_s + common.len())?;
    let stacked = code_all(&sys, t)?.into_matrix();
    let gamma = stacked.row_range(0, n_s);
    let z = stacked.row_range(n_s, stacked.rows());
    Ok(JointCodePair {
        z: SparseCode::new(z, t)?,
        gamma: SparseCode::new(gamma, t)?,
    })
}
