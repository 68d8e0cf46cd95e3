//! Dictionary learning for the common dictionary and the domain-specific
//! dictionaries.
//!
//! The common dictionary is learned by K-SVD over the union of source and
//! target samples. Domain-specific dictionaries alternate joint sparse coding
//! against `[D_spec | D^C]` with an atom-by-atom update whose objective adds
//! the incoherence penalty `λ‖D_spec D^Cᵀ‖_F²`.

mod incoherent;
mod ksvd;

pub use incoherent::{
    atom_objective, learn_specific, specific_objective, update_atom, update_specific_atoms,
    AtomUpdate, SpecificDictResult,
};
pub use ksvd::{learn_common, CommonDictResult};

use rand::seq::index::sample;

use crate::numerics::Matrix;
use crate::sparse_coding::Dictionary;
use crate::{DadlError, Result};

/// Relative objective change under which alternation stops.
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Default alternation cap.
pub const DEFAULT_ITERS: usize = 50;
/// Default incoherence weight.
pub const DEFAULT_LAMBDA: f64 = 0.1;

pub(crate) fn converged(prev: f64, cur: f64) -> bool {
    (prev - cur).abs() <= CONVERGENCE_TOL * prev.abs().max(f64::MIN_POSITIVE)
}

/// `n` distinct columns of `x` with non-negligible norm, drawn uniformly
/// without replacement and normalized.
pub(crate) fn sample_atoms(x: &Matrix, n: usize, rng: &mut impl rand::Rng) -> Result<Dictionary> {
    let norms = x.column_norms();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let pool: Vec<usize> = (0..x.cols())
        .filter(|&j| norms[j] > 1e-10 * top.max(f64::MIN_POSITIVE) && norms[j] > 0.0)
        .collect();
    if pool.len() < n {
        return Err(DadlError::DegenerateData(format!(
            "only {} nonzero columns available to initialize {n} atoms",
            pool.len()
        )));
    }
    let columns: Vec<Vec<f64>> = sample(rng, pool.len(), n).into_iter().map(|i| x.col(pool[i])).collect();
    Dictionary::normalized(Matrix::from_columns(&columns)?)
}

/// Column with the largest norm among those not yet used, if any is nonzero.
pub(crate) fn largest_residual_column(residual: &Matrix, used: &[bool]) -> Option<usize> {
    let norms = residual.column_norms();
    let mut best = None;
    let mut best_norm = 0.0;
    for (j, &v) in norms.iter().enumerate() {
        if !used[j] && v > best_norm {
            best_norm = v;
            best = Some(j);
        }
    }
    best.filter(|_| best_norm > 1e-12)
}
