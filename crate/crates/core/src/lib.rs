//! Domain-adaptive dictionary learning.
//!
//! A common dictionary captures structure shared by a source and a target
//! domain; a sequence of domain-specific dictionaries walks from the source
//! toward the target, and the reconstructions along that path are stacked
//! into augmented features for cross-domain classification.
//!
//! Module map:
//!
//! - [`numerics`]: dense matrices, SVD, SPD solves, PCA, matrix file formats
//! - [`sparse_coding`]: batch OMP and stacked multi-domain joint coding
//! - [`dict_learning`]: K-SVD common dictionary, incoherent specific dictionaries
//! - [`domain_path`]: the intermediate-domain path, source recovery, augmented features
//! - [`domain_synth`]: toy image datasets and blur / affine domain shifts
//! - [`pipeline`]: classifiers, experiment runner and reports

#![allow(clippy::needless_range_loop)]

pub mod dict_learning;
pub mod domain_path;
pub mod domain_synth;
mod error;
pub mod numerics;
pub mod pipeline;
pub(crate) mod rng;
pub mod sparse_coding;

pub use error::{DadlError, Result};
pub use numerics::Matrix;
pub use sparse_coding::{Dictionary, JointCodePair, SparseCode};
