//! Intermediate-domain path between a source and a target domain.
//!
//! Starting from the source-specific dictionary `D⁰`, each step codes the
//! target jointly against the target dictionary, the current dictionary and
//! every earlier intermediate representation, then moves the current
//! dictionary by the ridge update `ΔD = JΓᵀ(ηI + ΓΓᵀ)⁻¹` that shrinks the
//! target residue `J`.

mod store;

pub use store::{load_path, save_path};

use serde::{Deserialize, Serialize};

use crate::dict_learning::{learn_common, learn_specific, DEFAULT_ITERS, DEFAULT_LAMBDA};
use crate::numerics::{solve_spd, svd, Matrix};
use crate::sparse_coding::{joint_encode, Dictionary, JointCodePair, SparseCode};
use crate::{DadlError, Result};

/// Seed roles for the learning phases of [`adapt`].
const ROLE_COMMON: u64 = 1;
const ROLE_SPECIFIC: u64 = 2;

/// Fraction of `‖D⁰‖_F` used as stopping threshold when none is given.
pub const DEFAULT_DELTA_FRACTION: f64 = 1e-2;

fn default_n() -> usize {
    32
}
fn default_t() -> usize {
    8
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_eta() -> f64 {
    2000.0
}
fn default_max_domains() -> usize {
    30
}
fn default_dict_iters() -> usize {
    DEFAULT_ITERS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptConfig {
    /// Atoms per dictionary.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Joint sparsity budget.
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Threshold on `‖ΔD^k‖_F`; `None` means `1e-2 · ‖D⁰‖_F`.
    #[serde(default)]
    pub delta_stop: Option<f64>,
    #[serde(default = "default_max_domains")]
    pub max_domains: usize,
    #[serde(default = "default_dict_iters")]
    pub dict_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            t: default_t(),
            lambda: default_lambda(),
            eta: default_eta(),
            delta_stop: None,
            max_domains: default_max_domains(),
            dict_iters: default_dict_iters(),
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DadlError::Config(msg));
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        if self.t == 0 || self.t > self.n {
            return bad(format!("t must be in 1..={}, got {}", self.n, self.t));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be finite and > 0, got {}", self.eta));
        }
        if let Some(d) = self.delta_stop {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta_stop must be finite and > 0, got {d}"));
            }
        }
        if self.max_domains == 0 {
            return bad("max_domains must be >= 1".into());
        }
        Ok(())
    }
}

/// Diagnostics of one path step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    /// `‖ΔD^k‖_F`
    pub delta_norm: f64,
    /// `‖J^k‖_F`
    pub residue_norm: f64,
    /// `‖J^k − ΔD^k Γ^k‖_F`, bounded by `residue_norm`.
    pub pre_normalization_residue: f64,
    /// `‖X_t − D^C Z^k − D^{k+1} Γ^k‖_F` when `D^{k+1}` was kept.
    pub post_normalization_residue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainPath {
    pub config: AdaptConfig,
    /// Threshold actually used.
    pub delta_stop: f64,
    pub d_common: Dictionary,
    /// `[D⁰ … D^N]`.
    pub specifics: Vec<Dictionary>,
    pub d_target: Dictionary,
    /// Entry `k` is `D^C Z^k + D^k Γ^k`; same length as `specifics`.
    pub x_t_intermediate: Vec<Matrix>,
    pub step_log: Vec<StepRecord>,
    /// Target codes of the last step.
    pub target_codes: JointCodePair,
    /// Stopped on `‖ΔD^k‖_F ≤ δ`.
    pub converged: bool,
    /// Stopped on `max_domains` instead.
    pub truncated: bool,
}

impl DomainPath {
    /// Index of the last domain.
    pub fn last_index(&self) -> usize {
        self.specifics.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.d_common.dim()
    }

    pub fn residue_curve(&self) -> Vec<f64> {
        self.step_log.iter().map(|s| s.residue_norm).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecovery {
    pub z_final: SparseCode,
    pub gamma_final: SparseCode,
    /// `[X_s¹ … X_s^N]`.
    pub x_s_intermediate: Vec<Matrix>,
    /// Codes of every step, the `(x_s, D^t)` coding first.
    pub step_codes: Vec<JointCodePair>,
}

/// `J = X_t − D^C Z − D^k Γ`
pub fn residue(
    x_t: &Matrix,
    d_common: &Dictionary,
    z: &SparseCode,
    d_k: &Dictionary,
    gamma: &SparseCode,
) -> Result<Matrix> {
    if d_common.dim() != x_t.rows() || d_k.dim() != x_t.rows() {
        return Err(DadlError::dims("residue feature dimension", x_t.rows(), d_k.dim()));
    }
    if z.n_signals() != x_t.cols() || gamma.n_signals() != x_t.cols() {
        return Err(DadlError::dims("residue sample count", x_t.cols(), z.n_signals()));
    }
    let recon = d_common
        .atoms()
        .matmul(z.coeffs())?
        .add(&d_k.atoms().matmul(gamma.coeffs())?)?;
    x_t.sub(&recon)
}

/// Ridge minimizer of `‖J − ΔD Γ‖_F² + η‖ΔD‖_F²`.
pub fn dictionary_delta(j_k: &Matrix, gamma_k: &SparseCode, eta: f64) -> Result<Matrix> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DadlError::Parameter(format!("eta must be > 0, got {eta}")));
    }
    let g = gamma_k.coeffs();
    if g.cols() != j_k.cols() {
        return Err(DadlError::dims("dictionary_delta sample count", j_k.cols(), g.cols()));
    }
    let mut system = g.matmul_t(g)?;
    for i in 0..system.rows() {
        system.set(i, i, system.get(i, i) + eta);
    }
    // (ηI + ΓΓᵀ) ΔDᵀ = Γ Jᵀ
    Ok(solve_spd(&system, &g.matmul_t(j_k)?)?.transpose())
}

/// Both sides of `‖J − ΔDΓ‖² − ‖J‖² = −‖J V₁ Q‖²`, with `ΔD` from
/// [`dictionary_delta`] and `Q = diag(√(λᵢ⁴ + 2ηλᵢ²)/(λᵢ² + η))` over the
/// singular values `λᵢ` of `Γ`.
pub fn verify_residue_identity(j_k: &Matrix, gamma_k: &SparseCode, eta: f64) -> Result<(f64, f64)> {
    let delta = dictionary_delta(j_k, gamma_k, eta)?;
    let g = gamma_k.coeffs();
    let lhs = j_k.sub(&delta.matmul(g)?)?.frobenius_sq() - j_k.frobenius_sq();

    let dec = svd(g)?;
    // Columns of V₁ are rows of vt.
    let jv = j_k.matmul_t(&dec.vt)?;
    let mut rhs = 0.0;
    for (i, &l) in dec.s.iter().enumerate() {
        let l2 = l * l;
        let q2 = (l2 * l2 + 2.0 * eta * l2) / ((l2 + eta) * (l2 + eta));
        let col: f64 = (0..jv.rows()).map(|r| jv.get(r, i).powi(2)).sum();
        rhs -= q2 * col;
    }
    Ok((lhs, rhs))
}

fn combine(d_common: &Dictionary, d_k: &Dictionary, codes: &JointCodePair) -> Result<Matrix> {
    codes.reconstruct(d_common, d_k)
}

fn learn_endpoints(
    x_s: &Matrix,
    x_t: &Matrix,
    cfg: &AdaptConfig,
) -> Result<(Dictionary, Dictionary, Dictionary)> {
    let common = learn_common(
        x_s,
        x_t,
        cfg.n,
        cfg.t,
        cfg.dict_iters,
        crate::rng::derive(cfg.seed, ROLE_COMMON),
    )?;
    // Same seed on both sides: identical inputs give identical dictionaries.
    let seed = crate::rng::derive(cfg.seed, ROLE_SPECIFIC);
    let d_c = common.d_common;
    let d0 = learn_specific(x_s, &d_c, cfg.n, cfg.t, cfg.lambda, cfg.dict_iters, seed)?;
    let dt = learn_specific(x_t, &d_c, cfg.n, cfg.t, cfg.lambda, cfg.dict_iters, seed)?;
    Ok((d_c, d0.d_specific, dt.d_specific))
}

/// Code `x` at step `k`: blocks `(x, D^t)`, `(x, D^k)`, then `(X^i, D^i)` for
/// `i < k`.
fn code_step(
    path_dicts: &[Dictionary],
    d_target: &Dictionary,
    d_common: &Dictionary,
    x: &Matrix,
    intermediates: &[Matrix],
    t: usize,
) -> Result<JointCodePair> {
    let k = intermediates.len();
    let mut dicts: Vec<&Dictionary> = vec![d_target, &path_dicts[k]];
    let mut signals: Vec<&Matrix> = vec![x, x];
    for i in 0..k {
        dicts.push(&path_dicts[i]);
        signals.push(&intermediates[i]);
    }
    joint_encode(d_common, &dicts, &signals, t)
}

/// Learn the common and endpoint dictionaries and build the path.
pub fn adapt(x_s: &Matrix, x_t: &Matrix, cfg: &AdaptConfig) -> Result<DomainPath> {
    cfg.validate()?;
    if x_s.rows() != x_t.rows() {
        return Err(DadlError::dims("adapt feature dimension", x_s.rows(), x_t.rows()));
    }
    let (d_common, d0, d_target) = learn_endpoints(x_s, x_t, cfg)?;
    let delta_stop = cfg
        .delta_stop
        .unwrap_or(DEFAULT_DELTA_FRACTION * d0.atoms().frobenius_norm());

    let mut specifics = vec![d0];
    let mut intermediates: Vec<Matrix> = Vec::new();
    let mut step_log = Vec::new();
    let (mut converged, mut truncated) = (false, false);
    let target_codes = loop {
        let k = intermediates.len();
        let codes = code_step(&specifics, &d_target, &d_common, x_t, &intermediates, cfg.t)?;
        let d_k = &specifics[k];
        let j = residue(x_t, &d_common, &codes.z, d_k, &codes.gamma)?;
        let delta = dictionary_delta(&j, &codes.gamma, cfg.eta)?;
        let g = codes.gamma.coeffs();
        let mut record = StepRecord {
            k,
            delta_norm: delta.frobenius_norm(),
            residue_norm: j.frobenius_norm(),
            pre_normalization_residue: j.sub(&delta.matmul(g)?)?.frobenius_norm(),
            post_normalization_residue: None,
        };
        intermediates.push(combine(&d_common, d_k, &codes)?);
        if record.delta_norm <= delta_stop {
            converged = true;
        } else if k + 1 >= cfg.max_domains {
            truncated = true;
        } else {
            let next = Dictionary::normalized(d_k.atoms().add(&delta)?)?;
            record.post_normalization_residue =
                Some(residue(x_t, &d_common, &codes.z, &next, &codes.gamma)?.frobenius_norm());
            specifics.push(next);
        }
        step_log.push(record);
        if converged || truncated {
            break codes;
        }
    };

    Ok(DomainPath {
        config: cfg.clone(),
        delta_stop,
        d_common,
        specifics,
        d_target,
        x_t_intermediate: intermediates,
        step_log,
        target_codes,
        converged,
        truncated,
    })
}

fn check_rows(path: &DomainPath, x: &Matrix, what: &str) -> Result<()> {
    if x.rows() != path.dim() {
        return Err(DadlError::dims(what, path.dim(), x.rows()));
    }
    Ok(())
}

/// Source codes along a fixed path.
///
/// Step `k` (1 ≤ k ≤ N) codes the blocks `(x_s, D^t)` and `(X_s^i, D^i)` for
/// `1 ≤ i < k`; `X_s^k = D^C Z_s^k + D^k Γ_s^k`. A path with `N = 0` returns
/// the `(x_s, D^t)` coding with no intermediates.
pub fn recover_source(path: &DomainPath, x_s: &Matrix, t: usize) -> Result<SourceRecovery> {
    check_rows(path, x_s, "recover_source feature dimension")?;
    let n_last = path.last_index();
    let mut xs_int: Vec<Matrix> = Vec::with_capacity(n_last);
    let mut step_codes = Vec::with_capacity(n_last.max(1));
    if n_last == 0 {
        step_codes.push(joint_encode(&path.d_common, &[&path.d_target], &[x_s], t)?);
    }
    for k in 1..=n_last {
        let mut dicts: Vec<&Dictionary> = vec![&path.d_target];
        let mut signals: Vec<&Matrix> = vec![x_s];
        for i in 1..k {
            dicts.push(&path.specifics[i]);
            signals.push(&xs_int[i - 1]);
        }
        let codes = joint_encode(&path.d_common, &dicts, &signals, t)?;
        xs_int.push(combine(&path.d_common, &path.specifics[k], &codes)?);
        step_codes.push(codes);
    }
    let last = step_codes.last().expect("at least one step").clone();
    Ok(SourceRecovery {
        z_final: last.z,
        gamma_final: last.gamma,
        x_s_intermediate: xs_int,
        step_codes,
    })
}

/// Target-side codes of `x` along a fixed path: the coding chain of
/// [`adapt`] with every dictionary frozen. For the adapted target this
/// reproduces `path.target_codes`.
pub fn encode_target(path: &DomainPath, x: &Matrix, t: usize) -> Result<JointCodePair> {
    check_rows(path, x, "encode_target feature dimension")?;
    let mut intermediates: Vec<Matrix> = Vec::new();
    loop {
        let k = intermediates.len();
        let codes = code_step(&path.specifics, &path.d_target, &path.d_common, x, &intermediates, t)?;
        if k == path.last_index() {
            return Ok(codes);
        }
        intermediates.push(combine(&path.d_common, &path.specifics[k], &codes)?);
    }
}

/// `[D^C Z + D⁰ Γ; …; D^C Z + D^N Γ]`, a `(N+1)d × N_x` matrix.
pub fn augment_side(path: &DomainPath, z: &SparseCode, gamma: &SparseCode) -> Result<Matrix> {
    if z.n_atoms() != path.d_common.len() || gamma.n_atoms() != path.specifics[0].len() {
        return Err(DadlError::dims("augment code rows", path.d_common.len(), z.n_atoms()));
    }
    if z.n_signals() != gamma.n_signals() {
        return Err(DadlError::dims("augment sample count", z.n_signals(), gamma.n_signals()));
    }
    let common = path.d_common.atoms().matmul(z.coeffs())?;
    let blocks = path
        .specifics
        .iter()
        .map(|d| common.add(&d.atoms().matmul(gamma.coeffs())?))
        .collect::<Result<Vec<_>>>()?;
    Matrix::vstack(&blocks.iter().collect::<Vec<_>>())
}

/// Augmented source and target features over the whole path.
pub fn augment_features(
    path: &DomainPath,
    src: &SourceRecovery,
    z_t_final: &SparseCode,
    gamma_t_final: &SparseCode,
) -> Result<(Matrix, Matrix)> {
    Ok((
        augment_side(path, &src.z_final, &src.gamma_final)?,
        augment_side(path, z_t_final, gamma_t_final)?,
    ))
}
