//! Dense linear algebra used by every other module.

pub mod io;
mod linalg;
mod matrix;
mod pca;

pub use linalg::{solve_spd, svd, SvdResult};
pub use matrix::{dot, norm, Matrix};
pub use pca::{pca_fit, PcaModel, PcaTarget};
