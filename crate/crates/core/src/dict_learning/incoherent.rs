use super::{converged, largest_residual_column, sample_atoms};
use crate::numerics::{dot, norm, solve_spd, svd, Matrix};
use crate::sparse_coding::{joint_encode, Dictionary, SparseCode};
use crate::{DadlError, Result};

#[derive(Debug, Clone)]
pub struct SpecificDictResult {
    pub d_specific: Dictionary,
    /// Codes against the common dictionary.
    pub z: SparseCode,
    /// Codes against the specific dictionary.
    pub gamma: SparseCode,
    /// Objective after the initial coding and after each iteration.
    pub objective_trace: Vec<f64>,
    /// Dictionary the alternation started from.
    pub d_initial: Dictionary,
}

/// Result of a single incoherent atom update.
#[derive(Debug, Clone)]
pub struct AtomUpdate {
    /// Unit-norm atom.
    pub atom: Vec<f64>,
    /// Coefficient row multiplied by the pre-normalization atom norm.
    pub rescaled_alpha: Vec<f64>,
    /// Norm of the closed-form solution before normalization.
    pub scale: f64,
}

impl AtomUpdate {
    pub fn pre_normalization(&self) -> Vec<f64> {
        self.atom.iter().map(|v| v * self.scale).collect()
    }
}

/// `‖Ĵ − d α‖_F² + λ‖dᵀ D^C‖²`, the per-atom objective.
pub fn atom_objective(
    j_hat: &Matrix,
    atom: &[f64],
    alpha: &[f64],
    d_common: &Dictionary,
    lambda: f64,
) -> f64 {
    let mut fit = 0.0;
    for i in 0..j_hat.rows() {
        for (c, &a) in alpha.iter().enumerate() {
            let r = j_hat.get(i, c) - atom[i] * a;
            fit += r * r;
        }
    }
    let c = d_common.atoms();
    let penalty: f64 = (0..c.cols())
        .map(|k| {
            let p: f64 = (0..c.rows()).map(|i| c.get(i, k) * atom[i]).sum();
            p * p
        })
        .sum();
    fit + lambda * penalty
}

/// Closed-form incoherent atom update.
///
/// Solves `(‖α‖² I + λ D^C D^Cᵀ) d = Ĵ αᵀ`, then normalizes `d` and scales `α`
/// by the old norm so `d α` is unchanged.
pub fn update_atom(
    j_hat: &Matrix,
    alpha_row: &[f64],
    d_common: &Dictionary,
    lambda: f64,
) -> Result<AtomUpdate> {
    if lambda < 0.0 {
        return Err(DadlError::Parameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if alpha_row.len() != j_hat.cols() {
        return Err(DadlError::dims("update_atom coefficient row", j_hat.cols(), alpha_row.len()));
    }
    if d_common.dim() != j_hat.rows() {
        return Err(DadlError::dims("update_atom feature dimension", d_common.dim(), j_hat.rows()));
    }
    let a2 = dot(alpha_row, alpha_row);
    if a2 == 0.0 {
        return Err(DadlError::Singular(
            "coefficient row is zero; atom is undetermined".into(),
        ));
    }
    let c = d_common.atoms();
    let d = j_hat.rows();
    let mut system = c.matmul_t(c)?.scale(lambda);
    for i in 0..d {
        system.set(i, i, system.get(i, i) + a2);
    }
    let rhs = Matrix::new(d, 1, j_hat.matvec(alpha_row)?)?;
    let sol = solve_spd(&system, &rhs)?.col(0);
    normalize_update(sol, alpha_row)
}

fn normalize_update(pre: Vec<f64>, alpha: &[f64]) -> Result<AtomUpdate> {
    let scale = norm(&pre);
    if scale <= f64::MIN_POSITIVE {
        return Err(DadlError::Singular("closed-form atom is zero".into()));
    }
    Ok(AtomUpdate {
        atom: pre.iter().map(|v| v / scale).collect(),
        rescaled_alpha: alpha.iter().map(|v| v * scale).collect(),
        scale,
    })
}

/// Reusable solver for `(a I + λ D^C D^Cᵀ) d = y` across atoms, via the thin
/// SVD `D^C = U S Vᵀ`:
/// `d = y / a + U diag(1/(a + λ s²) − 1/a) Uᵀ y`.
pub(crate) struct IncoherentAtomSolver {
    u: Matrix,
    s2: Vec<f64>,
    lambda: f64,
    common: Matrix,
}

impl IncoherentAtomSolver {
    pub(crate) fn new(d_common: &Dictionary, lambda: f64) -> Result<Self> {
        let dec = svd(d_common.atoms())?;
        Ok(Self {
            s2: dec.s.iter().map(|s| s * s).collect(),
            u: dec.u,
            lambda,
            common: d_common.atoms().clone(),
        })
    }

    pub(crate) fn solve(&self, a: f64, y: &[f64]) -> Vec<f64> {
        let uty = self.u.t_matmul(&Matrix::new(y.len(), 1, y.to_vec()).unwrap()).unwrap();
        let mut out: Vec<f64> = y.iter().map(|v| v / a).collect();
        for (k, s2) in self.s2.iter().enumerate() {
            let w = (1.0 / (a + self.lambda * s2) - 1.0 / a) * uty.get(k, 0);
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.u.get(i, k) * w;
            }
        }
        out
    }

    /// `‖D^Cᵀ d‖²`
    pub(crate) fn penalty(&self, atom: &[f64]) -> f64 {
        let c = &self.common;
        let mut proj = vec![0.0; c.cols()];
        for (i, &a) in atom.iter().enumerate() {
            for (p, &v) in proj.iter_mut().zip(c.row(i)) {
                *p += v * a;
            }
        }
        dot(&proj, &proj)
    }
}

/// `‖x − D^C Z − D Γ‖² + λ‖D D^Cᵀ‖²`
pub fn specific_objective(
    x: &Matrix,
    d_common: &Dictionary,
    z: &SparseCode,
    d_spec: &Dictionary,
    gamma: &SparseCode,
    lambda: f64,
) -> Result<f64> {
    let recon = d_common
        .atoms()
        .matmul(z.coeffs())?
        .add(&d_spec.atoms().matmul(gamma.coeffs())?)?;
    let coh = d_spec.atoms().t_matmul(d_common.atoms())?;
    Ok(x.sub(&recon)?.frobenius_sq() + lambda * coh.frobenius_sq())
}

fn residual_of(x: &Matrix, c: &Matrix, z: &Matrix, d: &Matrix, g: &Matrix) -> Result<Matrix> {
    x.sub(&c.matmul(z)?)?.sub(&d.matmul(g)?)
}

/// One atom-by-atom sweep over `d_spec` with the codes held fixed.
///
/// Each atom takes the closed-form update computed on `Ĵ = x − D^C Z −
/// Σ_{k≠j} d_k α_k`, and is kept only if it does not raise the per-atom
/// objective measured with unit-norm atoms. Atoms with an all-zero
/// coefficient row are restarted on the largest residual column when that
/// does not increase their incoherence penalty.
pub fn update_specific_atoms(
    x: &Matrix,
    d_common: &Dictionary,
    z: &SparseCode,
    d_spec: &Dictionary,
    gamma: &SparseCode,
    lambda: f64,
) -> Result<(Dictionary, SparseCode)> {
    let solver = IncoherentAtomSolver::new(d_common, lambda)?;
    let mut atoms = d_spec.atoms().clone();
    let mut g = gamma.coeffs().clone();
    sweep(x, d_common, z.coeffs(), &mut atoms, &mut g, &solver)?;
    Ok((Dictionary::normalized(atoms)?, SparseCode::new(g, gamma.support_bound())?))
}

fn sweep(
    x: &Matrix,
    d_common: &Dictionary,
    z: &Matrix,
    atoms: &mut Matrix,
    g: &mut Matrix,
    solver: &IncoherentAtomSolver,
) -> Result<()> {
    let lambda = solver.lambda;
    let mut residual = residual_of(x, d_common.atoms(), z, atoms, g)?;
    let mut used = vec![false; x.cols()];
    let d = x.rows();
    for j in 0..atoms.cols() {
        let old = atoms.col(j);
        let omega: Vec<usize> = (0..g.cols()).filter(|&c| g.get(j, c) != 0.0).collect();
        if omega.is_empty() {
            if let Some(c) = largest_residual_column(&residual, &used) {
                let col = residual.col(c);
                let nrm = norm(&col);
                let cand: Vec<f64> = col.iter().map(|v| v / nrm).collect();
                if lambda == 0.0 || solver.penalty(&cand) <= solver.penalty(&old) {
                    used[c] = true;
                    atoms.set_col(j, &cand);
                }
            }
            continue;
        }
        let alpha: Vec<f64> = omega.iter().map(|&c| g.get(j, c)).collect();
        let a2 = dot(&alpha, &alpha);
        // Restricted Ĵ (columns outside the support do not involve this atom).
        let j_hat = Matrix::from_fn(d, omega.len(), |i, k| {
            residual.get(i, omega[k]) + old[i] * alpha[k]
        });
        let rhs = j_hat.matvec(&alpha)?;
        let Ok(upd) = normalize_update(solver.solve(a2, &rhs), &alpha) else {
            continue;
        };
        let f_old = residual_sq(&residual, &omega) + lambda * solver.penalty(&old);
        let mut f_new = lambda * solver.penalty(&upd.atom);
        for (k, &a) in upd.rescaled_alpha.iter().enumerate() {
            for i in 0..d {
                let r = j_hat.get(i, k) - upd.atom[i] * a;
                f_new += r * r;
            }
        }
        if f_new <= f_old {
            atoms.set_col(j, &upd.atom);
            for (k, &c) in omega.iter().enumerate() {
                g.set(j, c, upd.rescaled_alpha[k]);
                for i in 0..d {
                    residual.set(i, c, j_hat.get(i, k) - upd.atom[i] * upd.rescaled_alpha[k]);
                }
            }
        }
    }
    Ok(())
}

fn residual_sq(residual: &Matrix, cols: &[usize]) -> f64 {
    let mut s = 0.0;
    for i in 0..residual.rows() {
        let row = residual.row(i);
        for &c in cols {
            s += row[c] * row[c];
        }
    }
    s
}

/// Learn a domain-specific dictionary for `x` alongside a fixed common one.
///
/// Initial atoms are distinct normalized columns of `x`. The loop alternates joint
/// coding against `[D_spec | D^C]` with an atom sweep. Fresh codes replace
/// the old ones unless they raise the total residual, in which case each
/// column keeps the better of its two codes.
pub fn learn_specific(
    x: &Matrix,
    d_common: &Dictionary,
    n: usize,
    t: usize,
    lambda: f64,
    iters: usize,
    seed: u64,
) -> Result<SpecificDictResult> {
    if d_common.dim() != x.rows() {
        return Err(DadlError::dims("learn_specific feature dimension", d_common.dim(), x.rows()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(DadlError::Parameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if n == 0 {
        return Err(DadlError::Parameter("atom count must be >= 1".into()));
    }
    let mut rng = crate::rng::seeded(seed);
    let d_initial = sample_atoms(x, n, &mut rng)?;

    let solver = IncoherentAtomSolver::new(d_common, lambda)?;
    let c = d_common.atoms();
    let mut dict = d_initial.clone();
    let codes = joint_encode(d_common, &[&dict], &[x], t)?;
    let (mut z, mut g) = (codes.z.into_matrix(), codes.gamma.into_matrix());
    let penalty = |d: &Dictionary| -> Result<f64> {
        Ok(lambda * d.atoms().t_matmul(c)?.frobenius_sq())
    };
    let mut trace = vec![residual_of(x, c, &z, dict.atoms(), &g)?.frobenius_sq() + penalty(&dict)?];

    for _ in 0..iters {
        let mut atoms = dict.into_matrix();
        sweep(x, d_common, &z, &mut atoms, &mut g, &solver)?;
        dict = Dictionary::normalized(atoms)?;

        let fresh = joint_encode(d_common, &[&dict], &[x], t)?;
        let (fz, fg) = (fresh.z.coeffs(), fresh.gamma.coeffs());
        let fresh_res = residual_of(x, c, fz, dict.atoms(), fg)?;
        let mut residual = residual_of(x, c, &z, dict.atoms(), &g)?;
        let (fresh_norms, old_norms) = (fresh_res.column_norms(), residual.column_norms());
        let total = |v: &[f64]| v.iter().map(|r| r * r).sum::<f64>();
        if total(&fresh_norms) <= total(&old_norms) {
            z = fz.clone();
            g = fg.clone();
            residual = fresh_res;
        } else {
            for col in 0..x.cols() {
                if fresh_norms[col] <= old_norms[col] {
                    z.set_col(col, &fz.col(col));
                    g.set_col(col, &fg.col(col));
                    residual.set_col(col, &fresh_res.col(col));
                }
            }
        }
        let obj = residual.frobenius_sq() + penalty(&dict)?;
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if converged(prev, obj) {
            break;
        }
    }

    Ok(SpecificDictResult {
        d_specific: dict,
        z: SparseCode::new(z, t)?,
        gamma: SparseCode::new(g, t)?,
        objective_trace: trace,
        d_initial,
    })
}
