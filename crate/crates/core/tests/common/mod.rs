//! Independent reference implementations used as test oracles. Nothing here
//! calls into the solvers under test; everything works on plain nested
//! vectors or on `Matrix` entry access only.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod checks;

use dadl_core::{Dictionary, Matrix, SparseCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_dictionary(rng: &mut impl Rng, d: usize, n: usize) -> Dictionary {
    Dictionary::normalized(random_matrix(rng, d, n)).unwrap()
}

/// Random code with exactly `min(t, n)` nonzeros per column at random rows.
pub fn random_code(rng: &mut impl Rng, n: usize, cols: usize, t: usize) -> SparseCode {
    let mut m = Matrix::zeros(n, cols);
    for c in 0..cols {
        for r in rand::seq::index::sample(rng, n, t.min(n)) {
            let mag = rng.random_range(0.2..1.5);
            m.set(r, c, if rng.random::<bool>() { mag } else { -mag });
        }
    }
    SparseCode::new(m, t).unwrap()
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows());
    Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (a.get(i, j) - b.get(i, j)).abs())
        .fold(0.0, f64::max)
}

/// Gaussian elimination with partial pivoting; `b` has one right-hand side
/// per column.
pub fn lu_solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, s)| r.iter().chain(s).copied().collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| aug[i][k].abs().total_cmp(&aug[j][k].abs())).unwrap();
        aug.swap(k, p);
        let piv = aug[k][k];
        assert!(piv.abs() > 1e-300, "singular system in oracle");
        for i in k + 1..n {
            let f = aug[i][k] / piv;
            if f != 0.0 {
                for j in k..n + m {
                    aug[i][j] -= f * aug[k][j];
                }
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for c in 0..m {
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| aug[i][j] * x[j][c]).sum();
            x[i][c] = (aug[i][n + c] - s) / aug[i][i];
        }
    }
    x
}

/// Least-squares coefficients of `x` on the columns `support` of `a` via
/// Householder QR.
pub fn least_squares(a: &[Vec<f64>], support: &[usize], x: &[f64]) -> Vec<f64> {
    let rows = a.len();
    let k = support.len();
    let mut q: Vec<Vec<f64>> = (0..rows).map(|i| support.iter().map(|&s| a[i][s]).collect()).collect();
    let mut y = x.to_vec();
    for j in 0..k {
        let norm: f64 = (j..rows).map(|i| q[i][j] * q[i][j]).sum::<f64>().sqrt();
        let alpha = if q[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (0..rows).map(|i| if i < j { 0.0 } else { q[i][j] }).collect();
        v[j] -= alpha;
        let vv: f64 = v.iter().map(|t| t * t).sum();
        if vv == 0.0 {
            continue;
        }
        for c in j..k {
            let dotc: f64 = (j..rows).map(|i| v[i] * q[i][c]).sum();
            for i in j..rows {
                q[i][c] -= 2.0 * v[i] * dotc / vv;
            }
        }
        let doty: f64 = (j..rows).map(|i| v[i] * y[i]).sum();
        for i in j..rows {
            y[i] -= 2.0 * v[i] * doty / vv;
        }
    }
    let mut coef = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|c| q[j][c] * coef[c]).sum();
        coef[j] = (y[j] - s) / q[j][j];
    }
    coef
}

/// Textbook OMP on one signal against the columns of `a` (rows x atoms):
/// explicit residuals, ties to the smallest index, least squares by QR.
/// Mirrors the documented stopping rules: residual norm below `1e-12`, or
/// best correlation at most `1e-14 · ‖x‖`.
pub fn naive_omp(a: &[Vec<f64>], x: &[f64], t: usize) -> (Vec<usize>, Vec<f64>) {
    let rows = a.len();
    let atoms = a[0].len();
    let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut support: Vec<usize> = Vec::new();
    let mut coef: Vec<f64> = Vec::new();
    let mut r = x.to_vec();
    if x_norm < 1e-12 {
        return (support, coef);
    }
    for _ in 0..t {
        let mut best = None;
        let mut best_abs = 0.0;
        for j in 0..atoms {
            if support.contains(&j) {
                continue;
            }
            let c: f64 = (0..rows).map(|i| a[i][j] * r[i]).sum::<f64>().abs();
            if c > best_abs {
                best_abs = c;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if best_abs <= 1e-14 * x_norm {
            break;
        }
        support.push(j);
        coef = least_squares(a, &support, x);
        for i in 0..rows {
            r[i] = x[i] - support.iter().zip(&coef).map(|(&s, &c)| a[i][s] * c).sum::<f64>();
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
            break;
        }
    }
    (support, coef)
}

/// Dense `(support, coefficients)` of column `j`, in row order.
pub fn column_entries(code: &Matrix, j: usize) -> Vec<(usize, f64)> {
    (0..code.rows()).filter(|&i| code.get(i, j) != 0.0).map(|i| (i, code.get(i, j))).collect()
}

/// The naive OMP result as sorted `(row, value)` pairs.
pub fn sorted_entries(support: &[usize], coef: &[f64]) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = support.iter().copied().zip(coef.iter().copied()).collect();
    v.sort_by_key(|p| p.0);
    v
}

/// Row-stacked `[specifics[i] | common]` blocks and stacked signals.
pub fn materialize_stack(common: &Dictionary, specifics: &[&Dictionary], signals: &[&Matrix]) -> (Vec<Vec<f64>>, Matrix) {
    let mut a = Vec::new();
    let ns = specifics[0].len();
    for sp in specifics {
        for i in 0..sp.dim() {
            let mut row: Vec<f64> = (0..ns).map(|j| sp.atoms().get(i, j)).collect();
            row.extend((0..common.len()).map(|j| common.atoms().get(i, j)));
            a.push(row);
        }
    }
    let cols = signals[0].cols();
    let total_rows: usize = signals.iter().map(|s| s.rows()).sum();
    let mut x = Matrix::zeros(total_rows, cols);
    let mut off = 0;
    for s in signals {
        for i in 0..s.rows() {
            for j in 0..cols {
                x.set(off + i, j, s.get(i, j));
            }
        }
        off += s.rows();
    }
    (a, x)
}

/// Nesterov-accelerated gradient descent on a smooth convex function with
/// Lipschitz constant `lip`, until the gradient norm drops below `tol`.
pub fn accelerated_descent(
    mut x: Vec<f64>,
    lip: f64,
    tol: f64,
    max_iter: usize,
    grad: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..max_iter {
        let g = grad(&y);
        let next: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        // Restart momentum when the step direction turns against the gradient.
        let restart = g.iter().zip(next.iter().zip(&x)).map(|(gi, (n, o))| gi * (n - o)).sum::<f64>() > 0.0;
        y = if restart {
            t = 1.0;
            next.clone()
        } else {
            t = t_next;
            next.iter().zip(&x).map(|(n, o)| n + momentum * (n - o)).collect()
        };
        x = next;
        if grad(&x).iter().map(|v| v * v).sum::<f64>().sqrt() < tol {
            break;
        }
    }
    x
}

/// Central finite-difference gradient.
pub fn fd_gradient(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

pub fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn vec_diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `f(ΔD) = ‖J − ΔD Γ‖² + η‖ΔD‖²` and its gradient, with `ΔD` flattened
/// row-major (`d x n`).
pub fn delta_objective(j: &Matrix, g: &Matrix, eta: f64, dd: &[f64]) -> f64 {
    let (d, n, cols) = (j.rows(), g.rows(), j.cols());
    let mut f = 0.0;
    for i in 0..d {
        for c in 0..cols {
            let r = j.get(i, c) - (0..n).map(|k| dd[i * n + k] * g.get(k, c)).sum::<f64>();
            f += r * r;
        }
    }
    f + eta * dd.iter().map(|v| v * v).sum::<f64>()
}

pub fn delta_gradient(j: &Matrix, g: &Matrix, eta: f64, dd: &[f64]) -> Vec<f64> {
    let (d, n, cols) = (j.rows(), g.rows(), j.cols());
    let mut out: Vec<f64> = dd.iter().map(|v| 2.0 * eta * v).collect();
    for i in 0..d {
        for c in 0..cols {
            let r = j.get(i, c) - (0..n).map(|k| dd[i * n + k] * g.get(k, c)).sum::<f64>();
            for k in 0..n {
                out[i * n + k] -= 2.0 * r * g.get(k, c);
            }
        }
    }
    out
}

/// `g(d) = ‖Ĵ − d α‖² + λ‖D^Cᵀ d‖²` and its gradient.
pub fn atom_objective_naive(j: &Matrix, alpha: &[f64], common: &Matrix, lambda: f64, d: &[f64]) -> f64 {
    let mut f = 0.0;
    for i in 0..j.rows() {
        for (c, &a) in alpha.iter().enumerate() {
            let r = j.get(i, c) - d[i] * a;
            f += r * r;
        }
    }
    for k in 0..common.cols() {
        let p: f64 = (0..common.rows()).map(|i| common.get(i, k) * d[i]).sum();
        f += lambda * p * p;
    }
    f
}

pub fn atom_gradient_naive(j: &Matrix, alpha: &[f64], common: &Matrix, lambda: f64, d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d.len()];
    for i in 0..j.rows() {
        for (c, &a) in alpha.iter().enumerate() {
            let r = j.get(i, c) - d[i] * a;
            out[i] -= 2.0 * r * a;
        }
    }
    for k in 0..common.cols() {
        let p: f64 = (0..common.rows()).map(|i| common.get(i, k) * d[i]).sum();
        for i in 0..d.len() {
            out[i] += 2.0 * lambda * p * common.get(i, k);
        }
    }
    out
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration, padded
/// by 10% so it upper-bounds the true value for step-size purposes.
pub fn spectral_bound(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
    let mut est = 0.0;
    for _ in 0..500 {
        let w = apply(&v);
        let n = vec_norm(&w);
        if n == 0.0 {
            return 1.0;
        }
        est = n / vec_norm(&v);
        v = w.iter().map(|x| x / n).collect();
    }
    1.1 * est
}

/// Half-sample symmetric extension, written as repeated mirroring.
pub fn mirror(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Direct 2-D convolution `out(y,x) = Σ k(a,b) img(y − a + r, x − b + r)`
/// over an explicitly padded image.
pub fn naive_convolve(img: &[f64], h: usize, w: usize, taps: &Matrix) -> Vec<f64> {
    let size = taps.rows();
    let r = (size / 2) as i64;
    let (ph, pw) = (h + 2 * r as usize, w + 2 * r as usize);
    let padded: Vec<f64> = (0..ph * pw)
        .map(|idx| {
            let (py, px) = ((idx / pw) as i64 - r, (idx % pw) as i64 - r);
            img[mirror(py, h) * w + mirror(px, w)]
        })
        .collect();
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for a in 0..size {
                for b in 0..size {
                    // padded index of (y − (a − r), x − (b − r))
                    let py = y as i64 - a as i64 + 2 * r;
                    let px = x as i64 - b as i64 + 2 * r;
                    acc += taps.get(a, b) * padded[py as usize * pw + px as usize];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}
