//! Seeded single-instance checks shared by the module tests and the
//! acceptance suite. Each returns `Err` with a description on failure.

use super::*;
use dadl_core::dict_learning::{learn_common, learn_specific, update_atom};
use dadl_core::domain_path::{dictionary_delta, verify_residue_identity};
use dadl_core::sparse_coding::{joint_encode, omp_encode};
use rand::Rng;

pub const ETAS: [f64; 4] = [0.1, 1.0, 10.0, 2000.0];

fn fail(msg: String) -> Result<(), String> {
    Err(msg)
}

/// Residue shrinkage and the spectral residue identity on one random
/// instance with `d ∈ 4..=16`, `n ∈ 4..=32`, `N ∈ 10..=100`.
pub fn residue_identity(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let d = r.random_range(4..=16);
    let n = r.random_range(4..=32);
    let cols = r.random_range(10..=100);
    let eta = ETAS[r.random_range(0..ETAS.len())];
    let t = r.random_range(1..=n.min(8));
    let j = random_matrix(&mut r, d, cols);
    let g = random_code(&mut r, n, cols, t);
    let delta = dictionary_delta(&j, &g, eta).map_err(|e| e.to_string())?;
    let after = j.sub(&naive_matmul(&delta, g.coeffs())).unwrap().frobenius_norm();
    let before = j.frobenius_norm();
    if after > before + 1e-9 {
        return fail(format!("seed {seed}: residue grew {before} -> {after}"));
    }
    let (lhs, rhs) = verify_residue_identity(&j, &g, eta).map_err(|e| e.to_string())?;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    if (lhs - rhs).abs() > 1e-8 * scale {
        return fail(format!("seed {seed}: identity lhs {lhs} rhs {rhs}"));
    }
    Ok(())
}

/// `dictionary_delta` against accelerated gradient descent, plus analytic
/// and finite-difference gradients at the returned point.
pub fn delta_oracle(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let d = r.random_range(3..=8);
    let n = r.random_range(3..=10);
    let cols = r.random_range(8..=30);
    let eta = [0.1, 1.0, 10.0][r.random_range(0..3)];
    let t = r.random_range(1..=n.min(4));
    let j = random_matrix(&mut r, d, cols);
    let g = random_code(&mut r, n, cols, t);
    let gm = g.coeffs().clone();
    let got = dictionary_delta(&j, &g, eta).map_err(|e| e.to_string())?;
    let got_flat: Vec<f64> = got.data().to_vec();

    let lip = spectral_bound(n, |v| {
        (0..n)
            .map(|a| 2.0 * eta * v[a] + 2.0 * (0..n).map(|b| (0..cols).map(|c| gm.get(a, c) * gm.get(b, c)).sum::<f64>() * v[b]).sum::<f64>())
            .collect()
    });
    let grad = |x: &[f64]| delta_gradient(&j, &gm, eta, x);
    let start: Vec<f64> = (0..d * n).map(|_| r.random_range(-1.0..1.0)).collect();
    let oracle = accelerated_descent(start, lip, 1e-11, 500_000, grad);
    let diff = got_flat.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if diff > 1e-6 {
        return fail(format!("seed {seed}: dictionary_delta differs from descent by {diff:e}"));
    }
    check_stationary(seed, "dictionary_delta", &got_flat, |x| delta_objective(&j, &gm, eta, x), grad)
}

/// `update_atom` (pre-normalization solution) against descent from five
/// random starts, plus gradient checks.
pub fn atom_oracle(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let d = r.random_range(4..=12);
    let nc = r.random_range(2..=8);
    let cols = r.random_range(5..=15);
    let lambda = [0.0, 0.1, 1.0, 10.0][r.random_range(0..4)];
    let common = random_dictionary(&mut r, d, nc);
    let j = random_matrix(&mut r, d, cols);
    let alpha: Vec<f64> = (0..cols).map(|_| r.random_range(-1.0..1.0)).collect();
    let up = update_atom(&j, &alpha, &common, lambda).map_err(|e| e.to_string())?;
    let got = up.pre_normalization();
    if (vec_norm(&up.atom) - 1.0).abs() > 1e-12 {
        return fail(format!("seed {seed}: returned atom not unit norm"));
    }
    let c = common.atoms().clone();
    let a2: f64 = alpha.iter().map(|v| v * v).sum();
    let lip = spectral_bound(d, |v| {
        (0..d)
            .map(|i| 2.0 * a2 * v[i] + 2.0 * lambda * (0..nc).map(|k| c.get(i, k) * (0..d).map(|l| c.get(l, k) * v[l]).sum::<f64>()).sum::<f64>())
            .collect()
    });
    let grad = |x: &[f64]| atom_gradient_naive(&j, &alpha, &c, lambda, x);
    for start_no in 0..5 {
        let start: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let oracle = accelerated_descent(start, lip, 1e-11, 500_000, grad);
        let diff = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff > 1e-6 {
            return fail(format!("seed {seed}: update_atom differs from descent start {start_no} by {diff:e}"));
        }
    }
    check_stationary(seed, "update_atom", &got, |x| atom_objective_naive(&j, &alpha, &c, lambda, x), grad)
}

/// Analytic gradient below `1e-8` at `x`; finite differences at step `1e-6`
/// agree with the analytic gradient at `x` and at a perturbed point.
fn check_stationary(
    seed: u64,
    what: &str,
    x: &[f64],
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<(), String> {
    let g = grad(x);
    let gn = vec_norm(&g);
    if gn >= 1e-8 {
        return fail(format!("seed {seed}: {what} gradient norm {gn:e}"));
    }
    let fd = fd_gradient(x, 1e-6, &f);
    if vec_diff_norm(&fd, &g) > 1e-5 {
        return fail(format!("seed {seed}: {what} finite differences disagree at solution"));
    }
    let shifted: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + 0.3 * ((i as f64) * 1.7).sin()).collect();
    let (ga, gf) = (grad(&shifted), fd_gradient(&shifted, 1e-6, &f));
    if vec_diff_norm(&ga, &gf) > 1e-5 * (1.0 + vec_norm(&ga)) {
        return fail(format!("seed {seed}: {what} analytic gradient disagrees with finite differences"));
    }
    Ok(())
}

fn compare_code(seed: u64, what: &str, code: &dadl_core::Matrix, col: usize, want: Vec<(usize, f64)>) -> Result<(), String> {
    let got = column_entries(code, col);
    let sup_got: Vec<usize> = got.iter().map(|p| p.0).collect();
    let sup_want: Vec<usize> = want.iter().map(|p| p.0).collect();
    if sup_got != sup_want {
        return fail(format!("seed {seed}: {what} column {col} support {sup_got:?} vs oracle {sup_want:?}"));
    }
    for ((_, a), (_, b)) in got.iter().zip(&want) {
        if (a - b).abs() > 1e-10 {
            return fail(format!("seed {seed}: {what} column {col} coefficient {a} vs oracle {b}"));
        }
    }
    Ok(())
}

/// `omp_encode` and `joint_encode` against the naive oracle.
pub fn omp_equivalence(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let d = r.random_range(4..=16);
    let n = r.random_range(4..=24);
    let cols = r.random_range(1..=6);
    let t = r.random_range(1..=n.min(d));
    let dict = random_dictionary(&mut r, d, n);
    let x = random_matrix(&mut r, d, cols);
    let code = omp_encode(&dict, &x, t).map_err(|e| e.to_string())?;
    let a = to_rows(dict.atoms());
    for c in 0..cols {
        let (s, v) = naive_omp(&a, &x.col(c), t);
        compare_code(seed, "omp_encode", code.coeffs(), c, sorted_entries(&s, &v))?;
    }

    let blocks = r.random_range(1..=3);
    let ns = r.random_range(2..=8);
    let nc = r.random_range(2..=8);
    let common = random_dictionary(&mut r, d, nc);
    let specs: Vec<_> = (0..blocks).map(|_| random_dictionary(&mut r, d, ns)).collect();
    let sigs: Vec<_> = (0..blocks).map(|_| random_matrix(&mut r, d, cols)).collect();
    let spec_refs: Vec<_> = specs.iter().collect();
    let sig_refs: Vec<_> = sigs.iter().collect();
    let tj = r.random_range(1..=(ns + nc).min(d * blocks));
    let pair = joint_encode(&common, &spec_refs, &sig_refs, tj).map_err(|e| e.to_string())?;
    let stacked = dadl_core::Matrix::vstack(&[pair.gamma.coeffs(), pair.z.coeffs()]).unwrap();
    let (a, xs) = materialize_stack(&common, &spec_refs, &sig_refs);
    for c in 0..cols {
        let (s, v) = naive_omp(&a, &xs.col(c), tj);
        compare_code(seed, "joint_encode", &stacked, c, sorted_entries(&s, &v))?;
        if pair.joint_nnz(c) > tj {
            return fail(format!("seed {seed}: joint budget exceeded"));
        }
    }
    Ok(())
}

fn check_trace(seed: u64, what: &str, trace: &[f64]) -> Result<(), String> {
    for (k, w) in trace.windows(2).enumerate() {
        if w[1] > w[0] + 1e-9 {
            return fail(format!("seed {seed}: {what} objective rose at iteration {}: {} -> {}", k + 1, w[0], w[1]));
        }
    }
    Ok(())
}

fn check_unit(seed: u64, what: &str, d: &dadl_core::Dictionary) -> Result<(), String> {
    for (j, nrm) in d.atoms().column_norms().iter().enumerate() {
        if (nrm - 1.0).abs() > 1e-8 {
            return fail(format!("seed {seed}: {what} atom {j} has norm {nrm}"));
        }
    }
    Ok(())
}

/// Objective traces of both learners are non-increasing; atoms unit norm.
pub fn descent_monotonicity(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let d = r.random_range(6..=14);
    let n = r.random_range(6..=14);
    let t = r.random_range(2..=4);
    let x_s = random_matrix(&mut r, d, 40);
    let x_t = random_matrix(&mut r, d, 35);
    let com = learn_common(&x_s, &x_t, n, t, 15, seed).map_err(|e| e.to_string())?;
    check_trace(seed, "learn_common", &com.objective_trace)?;
    check_unit(seed, "learn_common", &com.d_common)?;
    let lambda = [0.0, 0.1, 1.0][r.random_range(0..3)];
    let spec = learn_specific(&x_s, &com.d_common, n, t, lambda, 15, seed ^ 1).map_err(|e| e.to_string())?;
    check_trace(seed, "learn_specific", &spec.objective_trace)?;
    check_unit(seed, "learn_specific", &spec.d_specific)?;
    Ok(())
}
