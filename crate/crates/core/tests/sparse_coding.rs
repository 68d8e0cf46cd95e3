mod common;

use common::checks::omp_equivalence;
use common::*;
use dadl_core::sparse_coding::{joint_encode, omp_encode};
use dadl_core::{DadlError, Dictionary, Matrix};
use proptest::prelude::*;

#[test]
fn omp_matches_naive_oracle() {
    for seed in 0..100 {
        omp_equivalence(1000 + seed).unwrap();
    }
}

#[test]
fn exact_sparse_signals_are_recovered() {
    let mut r = rng(21);
    let dict = random_dictionary(&mut r, 20, 30);
    let truth = random_code(&mut r, 30, 25, 3);
    let x = naive_matmul(dict.atoms(), truth.coeffs());
    let code = omp_encode(&dict, &x, 3).unwrap();
    let recon = naive_matmul(dict.atoms(), code.coeffs());
    assert!(max_abs_diff(&recon, &x) < 1e-10);
}

#[test]
fn identity_dictionary_keeps_largest_entries() {
    let dict = Dictionary::new(Matrix::identity(4)).unwrap();
    let x = Matrix::new(4, 1, vec![0.1, -3.0, 2.0, 0.5]).unwrap();
    let code = omp_encode(&dict, &x, 2).unwrap();
    assert_eq!(column_entries(code.coeffs(), 0), vec![(1, -3.0), (2, 2.0)]);
}

#[test]
fn bad_budgets_and_shapes_are_rejected() {
    let mut r = rng(2);
    let dict = random_dictionary(&mut r, 5, 6);
    let x = random_matrix(&mut r, 5, 2);
    assert!(matches!(omp_encode(&dict, &x, 0), Err(DadlError::Parameter(_))));
    assert!(matches!(omp_encode(&dict, &x, 7), Err(DadlError::Parameter(_))));
    assert!(omp_encode(&dict, &random_matrix(&mut r, 4, 2), 2).is_err());
    let other = random_dictionary(&mut r, 5, 3);
    assert!(joint_encode(&dict, &[&other, &other], &[&x], 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_audit(d in 3usize..10, n in 3usize..14, cols in 1usize..6, seed in 0u64..10_000) {
        let mut r = rng(seed);
        let t = 1 + (seed as usize) % n.min(d);
        let dict = random_dictionary(&mut r, d, n);
        let x = random_matrix(&mut r, d, cols);
        let code = omp_encode(&dict, &x, t).unwrap();
        for c in 0..cols {
            prop_assert!(code.nnz(c) <= t);
            // Residual is orthogonal to every selected atom.
            let recon = naive_matmul(dict.atoms(), code.coeffs());
            for &j in &code.support(c) {
                let ip: f64 = (0..d).map(|i| dict.atoms().get(i, j) * (x.get(i, c) - recon.get(i, c))).sum();
                prop_assert!(ip.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn joint_budget_and_shared_support(d in 3usize..8, seed in 0u64..10_000) {
        let mut r = rng(seed);
        let common = random_dictionary(&mut r, d, 4);
        let a = random_dictionary(&mut r, d, 3);
        let b = random_dictionary(&mut r, d, 3);
        let xa = random_matrix(&mut r, d, 3);
        let xb = random_matrix(&mut r, d, 3);
        let t = 1 + (seed as usize) % 5;
        let pair = joint_encode(&common, &[&a, &b], &[&xa, &xb], t).unwrap();
        prop_assert_eq!(pair.z.n_atoms(), 4);
        prop_assert_eq!(pair.gamma.n_atoms(), 3);
        for c in 0..3 {
            prop_assert!(pair.joint_nnz(c) <= t);
        }
    }

    #[test]
    fn scaling_the_signal_scales_the_code(seed in 0u64..10_000, s in 0.1f64..10.0) {
        let mut r = rng(seed);
        let dict = random_dictionary(&mut r, 6, 9);
        let x = random_matrix(&mut r, 6, 2);
        let a = omp_encode(&dict, &x, 3).unwrap();
        let b = omp_encode(&dict, &x.scale(s), 3).unwrap();
        prop_assert!(max_abs_diff(&a.coeffs().scale(s), b.coeffs()) < 1e-9 * s.max(1.0));
    }
}
