use serde::{Deserialize, Serialize};

use crate::numerics::{solve_spd, Matrix};
use crate::{DadlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NearestNeighbor,
    LinearOvr,
}

/// Relative ridge weight for [`ClassifierKind::LinearOvr`], scaled by
/// `trace(X̄X̄ᵀ)/p` of the bias-augmented training features.
pub const RIDGE_SCALE: f64 = 1e-3;

/// Predict labels for the columns of `test_x`.
///
/// Classes are `0..=max(train_y)`, each of which must occur in `train_y`.
pub fn classify(
    train_x: &Matrix,
    train_y: &[usize],
    test_x: &Matrix,
    kind: ClassifierKind,
) -> Result<Vec<usize>> {
    if train_x.rows() != test_x.rows() {
        return Err(DadlError::dims("classify feature dimension", train_x.rows(), test_x.rows()));
    }
    if train_y.len() != train_x.cols() {
        return Err(DadlError::dims("classify label count", train_x.cols(), train_y.len()));
    }
    let n_classes = train_y.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; n_classes];
    train_y.iter().for_each(|&c| seen[c] = true);
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(DadlError::Contract(format!("class {c} has no training samples")));
    }
    match kind {
        ClassifierKind::NearestNeighbor => Ok(nearest_neighbor(train_x, train_y, test_x)),
        ClassifierKind::LinearOvr => linear_ovr(train_x, train_y, test_x, n_classes),
    }
}

fn nearest_neighbor(train_x: &Matrix, train_y: &[usize], test_x: &Matrix) -> Vec<usize> {
    let train_t = train_x.transpose();
    let test_t = test_x.transpose();
    (0..test_t.rows())
        .map(|q| {
            let probe = test_t.row(q);
            let mut best = (f64::INFINITY, usize::MAX);
            for (i, &label) in train_y.iter().enumerate() {
                let d: f64 = train_t
                    .row(i)
                    .iter()
                    .zip(probe)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.0 || (d == best.0 && label < best.1) {
                    best = (d, label);
                }
            }
            best.1
        })
        .collect()
}

fn with_bias(x: &Matrix) -> Matrix {
    Matrix::from_fn(x.rows() + 1, x.cols(), |i, j| if i < x.rows() { x.get(i, j) } else { 1.0 })
}

/// Ridge weights `(p+1) x C` for ±1 one-vs-rest targets.
pub(crate) fn ridge_weights(train_x: &Matrix, train_y: &[usize], n_classes: usize) -> Result<Matrix> {
    let xb = with_bias(train_x);
    let p = xb.rows();
    let mut gram = xb.matmul_t(&xb)?;
    let mu = RIDGE_SCALE * gram.trace() / p as f64;
    for i in 0..p {
        gram.set(i, i, gram.get(i, i) + mu.max(f64::MIN_POSITIVE));
    }
    let targets = Matrix::from_fn(train_y.len(), n_classes, |s, c| if train_y[s] == c { 1.0 } else { -1.0 });
    solve_spd(&gram, &xb.matmul(&targets)?)
}

fn linear_ovr(train_x: &Matrix, train_y: &[usize], test_x: &Matrix, n_classes: usize) -> Result<Vec<usize>> {
    let w = ridge_weights(train_x, train_y, n_classes)?;
    let scores = with_bias(test_x).t_matmul(&w)?;
    Ok((0..scores.rows())
        .map(|q| {
            let row = scores.row(q);
            let mut best = 0;
            for c in 1..n_classes {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}
