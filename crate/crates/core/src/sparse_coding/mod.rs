//! ℓ₀-constrained sparse coding.
//!
//! Every coding subproblem in the crate goes through orthogonal matching
//! pursuit, including the stacked multi-domain system. An ℓ₁ solver (LASSO)
//! would be a faithful alternative for the joint problems; OMP is used so the
//! support constraint `‖z‖₀ + ‖γ‖₀ ≤ T` holds exactly and results are
//! deterministic.

mod omp;

pub use omp::{joint_encode, omp_encode};

use crate::numerics::Matrix;
use crate::{DadlError, Result};

/// Tolerance on atom norms.
pub const UNIT_NORM_TOL: f64 = 1e-8;

/// A `d x n` matrix whose columns (atoms) have unit ℓ₂ norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Matrix,
}

impl Dictionary {
    /// Wrap a matrix whose columns are already unit-norm.
    pub fn new(atoms: Matrix) -> Result<Self> {
        for (j, nrm) in atoms.column_norms().into_iter().enumerate() {
            if (nrm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(DadlError::Contract(format!(
                    "dictionary atom {j} has norm {nrm}, expected 1"
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// Normalize every column to unit length. Zero columns are rejected.
    pub fn normalized(mut atoms: Matrix) -> Result<Self> {
        let norms = atoms.column_norms();
        if let Some(j) = norms.iter().position(|&v| v <= f64::MIN_POSITIVE) {
            return Err(DadlError::DegenerateData(format!(
                "cannot normalize zero atom {j}"
            )));
        }
        for i in 0..atoms.rows() {
            for (v, nrm) in atoms.row_mut(i).iter_mut().zip(&norms) {
                *v /= nrm;
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &Matrix {
        &self.atoms
    }

    pub fn into_matrix(self) -> Matrix {
        self.atoms
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.atoms.rows()
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atom(&self, j: usize) -> Vec<f64> {
        self.atoms.col(j)
    }

    /// `[self | other]` as a plain matrix (columns of `other` are not
    /// re-normalized, they already are).
    pub fn concat(&self, other: &Dictionary) -> Result<Dictionary> {
        Ok(Dictionary {
            atoms: self.atoms.hstack(&other.atoms)?,
        })
    }
}

/// `n x N` coefficient matrix with at most `support_bound` nonzeros per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    coeffs: Matrix,
    support_bound: usize,
}

impl SparseCode {
    pub fn new(coeffs: Matrix, support_bound: usize) -> Result<Self> {
        let code = Self {
            coeffs,
            support_bound,
        };
        for j in 0..code.n_signals() {
            let nnz = code.nnz(j);
            if nnz > support_bound {
                return Err(DadlError::Contract(format!(
                    "column {j} has {nnz} nonzeros, bound is {support_bound}"
                )));
            }
        }
        Ok(code)
    }

    pub fn zeros(n_atoms: usize, n_signals: usize, support_bound: usize) -> Self {
        Self {
            coeffs: Matrix::zeros(n_atoms, n_signals),
            support_bound,
        }
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn into_matrix(self) -> Matrix {
        self.coeffs
    }

    pub fn support_bound(&self) -> usize {
        self.support_bound
    }

    pub fn n_atoms(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn n_signals(&self) -> usize {
        self.coeffs.cols()
    }

    /// Indices of nonzero coefficients in column `j`, ascending.
    pub fn support(&self, j: usize) -> Vec<usize> {
        (0..self.n_atoms())
            .filter(|&i| self.coeffs.get(i, j) != 0.0)
            .collect()
    }

    pub fn nnz(&self, j: usize) -> usize {
        (0..self.n_atoms())
            .filter(|&i| self.coeffs.get(i, j) != 0.0)
            .count()
    }

    /// True when row `i` (one atom's coefficients) is identically zero.
    pub fn row_is_zero(&self, i: usize) -> bool {
        self.coeffs.row(i).iter().all(|&v| v == 0.0)
    }
}

/// Codes against the common dictionary (`z`) and the domain-specific
/// dictionaries (`gamma`), sharing one support budget per column.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCodePair {
    pub z: SparseCode,
    pub gamma: SparseCode,
}

impl JointCodePair {
    pub fn joint_nnz(&self, j: usize) -> usize {
        self.z.nnz(j) + self.gamma.nnz(j)
    }

    pub fn support_bound(&self) -> usize {
        self.z.support_bound()
    }

    /// `D^C z + D_spec γ`.
    pub fn reconstruct(&self, common: &Dictionary, specific: &Dictionary) -> Result<Matrix> {
        common
            .atoms()
            .matmul(self.z.coeffs())?
            .add(&specific.atoms().matmul(self.gamma.coeffs())?)
    }
}
