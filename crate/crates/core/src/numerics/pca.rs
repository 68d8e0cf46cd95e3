use serde::{Deserialize, Serialize};

use super::linalg::symmetric_eigen;
use super::matrix::{dot, norm};
use super::Matrix;
use crate::{DadlError, Result};

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PcaTarget {
    /// Keep exactly this many components.
    FixedDim(usize),
    /// Keep the smallest number of components whose cumulative explained
    /// variance reaches this fraction of the total.
    VarianceFraction(f64),
}

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d x p`, orthonormal columns.
    pub basis: Matrix,
    /// Per-component variance, descending.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    fn centered(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.mean.len() {
            return Err(DadlError::dims("pca input rows", self.mean.len(), x.rows()));
        }
        let mut c = x.clone();
        for (i, &m) in self.mean.iter().enumerate() {
            for v in c.row_mut(i) {
                *v -= m;
            }
        }
        Ok(c)
    }

    /// Center by the fitted mean and project onto the basis: `p x N`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.basis.t_matmul(&self.centered(x)?)
    }

    /// Map projected coordinates back to the input space.
    pub fn reconstruct(&self, coords: &Matrix) -> Result<Matrix> {
        let mut out = self.basis.matmul(coords)?;
        for (i, &m) in self.mean.iter().enumerate() {
            for v in out.row_mut(i) {
                *v += m;
            }
        }
        Ok(out)
    }
}

/// Fit PCA on the columns of `x` (`d x N`, one sample per column).
///
/// Works on whichever of the `d x d` covariance or the `N x N` Gram matrix is
/// smaller.
pub fn pca_fit(x: &Matrix, target: PcaTarget) -> Result<PcaModel> {
    let (d, n) = x.shape();
    if n < 2 {
        return Err(DadlError::Parameter(format!(
            "pca needs at least 2 samples, got {n}"
        )));
    }
    if let PcaTarget::FixedDim(p) = target {
        if p == 0 || p > d.min(n) {
            return Err(DadlError::Parameter(format!(
                "pca dimension {p} outside 1..={}",
                d.min(n)
            )));
        }
    }
    if let PcaTarget::VarianceFraction(f) = target {
        if !(f > 0.0 && f <= 1.0) {
            return Err(DadlError::Parameter(format!(
                "variance fraction {f} outside (0, 1]"
            )));
        }
    }

    let mean: Vec<f64> = (0..d).map(|i| x.row(i).iter().sum::<f64>() / n as f64).collect();
    let mut xc = x.clone();
    for (i, &m) in mean.iter().enumerate() {
        for v in xc.row_mut(i) {
            *v -= m;
        }
    }
    let denom = (n - 1) as f64;

    // Eigen-pairs of the covariance, eigenvectors as d-vectors.
    let (vals, vectors): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let cov = xc.matmul_t(&xc)?.scale(1.0 / denom);
        let (vals, vecs) = symmetric_eigen(&symmetrize(cov))?;
        (vals, (0..d).map(|j| vecs.col(j)).collect())
    } else {
        let xt = xc.transpose();
        let gram = xt.matmul_t(&xt)?.scale(1.0 / denom);
        let (vals, vecs) = symmetric_eigen(&symmetrize(gram))?;
        let scale_floor = 1e-12 * vals.first().copied().unwrap_or(0.0).max(0.0);
        let mut out = Vec::new();
        for (j, &lam) in vals.iter().enumerate() {
            if lam <= scale_floor {
                break;
            }
            let u = xc.matvec(&vecs.col(j))?;
            let s = norm(&u);
            out.push(u.iter().map(|v| v / s).collect());
        }
        (vals, out)
    };

    let vals: Vec<f64> = vals.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = vals.iter().sum();
    let p = match target {
        PcaTarget::FixedDim(p) => p,
        PcaTarget::VarianceFraction(f) => {
            if total <= 0.0 {
                return Err(DadlError::DegenerateData(
                    "zero total variance; variance-fraction target undefined".into(),
                ));
            }
            let mut acc = 0.0;
            let mut p = vals.len();
            for (i, v) in vals.iter().enumerate() {
                acc += v;
                if acc / total >= f - 1e-12 {
                    p = i + 1;
                    break;
                }
            }
            p
        }
    };

    let mut basis_cols: Vec<Vec<f64>> = vectors.into_iter().take(p).collect();
    complete_orthonormal(&mut basis_cols, d, p);
    for c in basis_cols.iter_mut() {
        let (mut best, mut sign) = (-1.0, 1.0);
        for v in c.iter() {
            if v.abs() > best {
                best = v.abs();
                sign = if *v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        c.iter_mut().for_each(|v| *v *= sign);
    }
    let basis = Matrix::from_columns(&basis_cols)?;
    Ok(PcaModel {
        mean,
        basis,
        explained_variance: vals.into_iter().take(p).collect(),
    })
}

fn symmetrize(m: Matrix) -> Matrix {
    let n = m.rows();
    Matrix::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
}

/// Extend `cols` to `p` orthonormal vectors with Gram-Schmidt over the
/// standard basis (only needed when the data has fewer nonzero directions
/// than requested).
fn complete_orthonormal(cols: &mut Vec<Vec<f64>>, d: usize, p: usize) {
    let mut e = 0;
    while cols.len() < p && e < d {
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for _ in 0..2 {
            for c in cols.iter() {
                let proj = dot(c, &v);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            cols.push(v.into_iter().map(|x| x / nv).collect());
        }
        e += 1;
    }
}
