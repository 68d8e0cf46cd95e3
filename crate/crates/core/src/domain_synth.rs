//! Seeded toy image datasets and synthetic domain shifts.
//!
//! Images are stored one per column, row-major within the column
//! (`pixel (y, x)` at row `y * width + x`). Blur kernels are applied by 2-D
//! convolution with half-sample symmetric padding (`d c b a | a b c d | d c b a`).

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::io::{load_matrix, save_matrix};
use crate::numerics::Matrix;
use crate::{DadlError, Result};

/// Per-pixel noise standard deviation.
pub const NOISE_SIGMA: f64 = 0.05;
/// Illumination gain range.
pub const GAIN_RANGE: (f64, f64) = (0.7, 1.3);
/// Gaussian bumps per class template.
pub const BUMPS_PER_CLASS: usize = 3;
/// Bump width range in pixels.
pub const BUMP_WIDTH: (f64, f64) = (0.7, 1.4);

#[derive(Debug, Clone, PartialEq)]
pub struct ToyImageDataset {
    /// `height * width` rows, one image per column, values in `[0, 1]`.
    pub images: Matrix,
    pub labels: Vec<usize>,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
}

impl ToyImageDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Columns `idx` with their labels.
    pub fn subset(&self, idx: &[usize]) -> ToyImageDataset {
        ToyImageDataset {
            images: self.images.select_cols(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            height: self.height,
            width: self.width,
            seed: self.seed,
        }
    }

    fn with_images(&self, images: Matrix) -> ToyImageDataset {
        ToyImageDataset {
            images,
            labels: self.labels.clone(),
            height: self.height,
            width: self.width,
            seed: self.seed,
        }
    }
}

/// `classes` smooth templates, each the sum of three Gaussian bumps scaled
/// to peak 1, with `per_class` noisy, gain-jittered, clipped samples each.
/// Samples are grouped by class.
pub fn make_toy_dataset(
    classes: usize,
    per_class: usize,
    h: usize,
    w: usize,
    seed: u64,
) -> Result<ToyImageDataset> {
    if classes < 2 || per_class < 2 {
        return Err(DadlError::Parameter(format!(
            "need >= 2 classes and >= 2 samples per class, got {classes} x {per_class}"
        )));
    }
    if h == 0 || w == 0 {
        return Err(DadlError::Parameter("image size must be positive".into()));
    }
    let mut rng = crate::rng::seeded(seed);
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    let d = h * w;
    let mut images = Matrix::zeros(d, classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let template = template(&mut rng, h, w);
        for s in 0..per_class {
            let gain = rng.random_range(GAIN_RANGE.0..=GAIN_RANGE.1);
            let col = c * per_class + s;
            for (i, &v) in template.iter().enumerate() {
                let px = gain * v + noise.sample(&mut rng);
                images.set(i, col, px.clamp(0.0, 1.0));
            }
            labels.push(c);
        }
    }
    Ok(ToyImageDataset {
        images,
        labels,
        height: h,
        width: w,
        seed,
    })
}

fn template(rng: &mut impl Rng, h: usize, w: usize) -> Vec<f64> {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..BUMPS_PER_CLASS)
        .map(|_| {
            (
                rng.random_range(0.0..h as f64),
                rng.random_range(0.0..w as f64),
                rng.random_range(BUMP_WIDTH.0..BUMP_WIDTH.1),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let mut img: Vec<f64> = (0..h * w)
        .map(|i| {
            let (y, x) = ((i / w) as f64, (i % w) as f64);
            bumps
                .iter()
                .map(|&(cy, cx, s, a)| a * (-((y - cy).powi(2) + (x - cx).powi(2)) / (2.0 * s * s)).exp())
                .sum()
        })
        .collect();
    let peak = img.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        img.iter_mut().for_each(|v| *v /= peak);
    }
    img
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelKind {
    Gaussian { sigma: f64 },
    Motion { length: usize, theta_deg: f64 },
}

/// Non-negative taps summing to 1 on an odd square grid centered on the
/// middle tap.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    pub taps: Matrix,
    pub kind: KernelKind,
}

impl BlurKernel {
    /// Normalized Gaussian of side `2⌈3σ⌉ + 1`; `σ = 0` is the identity.
    pub fn gaussian(sigma: f64) -> Result<BlurKernel> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(DadlError::Parameter(format!("sigma must be >= 0, got {sigma}")));
        }
        let r = (3.0 * sigma).ceil() as usize;
        let size = 2 * r + 1;
        let mut taps = Matrix::from_fn(size, size, |i, j| {
            if sigma == 0.0 {
                return 1.0;
            }
            let (dy, dx) = (i as f64 - r as f64, j as f64 - r as f64);
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        });
        let total: f64 = taps.data().iter().sum();
        taps = taps.scale(1.0 / total);
        Ok(BlurKernel {
            taps,
            kind: KernelKind::Gaussian { sigma },
        })
    }

    /// `length` equal taps on the line through the center at `theta_deg`
    /// (counterclockwise from +x, image y pointing down). Tap `k` sits at the
    /// pixel nearest `k·(cos θ, −sin θ)/max(|cos θ|, |sin θ|)` for
    /// `k = −r..=r`, so consecutive taps advance one pixel along the
    /// dominant axis and all `length` taps are distinct.
    pub fn motion(length: usize, theta_deg: f64) -> Result<BlurKernel> {
        if length == 0 || length.is_multiple_of(2) {
            return Err(DadlError::Parameter(format!(
                "motion blur length must be odd and >= 1, got {length}"
            )));
        }
        if !theta_deg.is_finite() {
            return Err(DadlError::Parameter("theta must be finite".into()));
        }
        let r = (length / 2) as i64;
        let size = length;
        let th = theta_deg.to_radians();
        let (c, s) = (th.cos(), th.sin());
        let step = 1.0 / c.abs().max(s.abs());
        let mut taps = Matrix::zeros(size, size);
        for k in -r..=r {
            let dx = (k as f64 * c * step).round() as i64;
            let dy = (-(k as f64) * s * step).round() as i64;
            let (i, j) = ((dy + r) as usize, (dx + r) as usize);
            taps.set(i, j, taps.get(i, j) + 1.0 / length as f64);
        }
        Ok(BlurKernel {
            taps,
            kind: KernelKind::Motion { length, theta_deg },
        })
    }

    pub fn radius(&self) -> usize {
        self.taps.rows() / 2
    }

    /// Convolve one `h x w` row-major image.
    pub fn apply(&self, img: &[f64], h: usize, w: usize) -> Vec<f64> {
        let r = self.radius() as i64;
        let size = self.taps.rows();
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for a in 0..size {
                    let yy = reflect(y as i64 - (a as i64 - r), h);
                    let row = self.taps.row(a);
                    for (b, &k) in row.iter().enumerate() {
                        if k != 0.0 {
                            let xx = reflect(x as i64 - (b as i64 - r), w);
                            acc += k * img[yy * w + xx];
                        }
                    }
                }
                out[y * w + x] = acc;
            }
        }
        out
    }
}

/// Half-sample symmetric index into `0..n`, period `2n`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// Apply `kernel` to every image of `ds`.
pub fn blur_dataset(ds: &ToyImageDataset, kernel: &BlurKernel) -> ToyImageDataset {
    let (h, w) = (ds.height, ds.width);
    let cols: Vec<Vec<f64>> = (0..ds.images.cols())
        .into_par_iter()
        .map(|j| kernel.apply(&ds.images.col(j), h, w))
        .collect();
    ds.with_images(Matrix::from_columns(&cols).expect("non-empty dataset"))
}

pub fn gaussian_blur_shift(ds: &ToyImageDataset, sigma: f64) -> Result<ToyImageDataset> {
    Ok(blur_dataset(ds, &BlurKernel::gaussian(sigma)?))
}

pub fn motion_blur_shift(ds: &ToyImageDataset, length: usize, theta_deg: f64) -> Result<ToyImageDataset> {
    Ok(blur_dataset(ds, &BlurKernel::motion(length, theta_deg)?))
}

/// `a·x + b` with `b` added to every column.
pub fn linear_shift(x: &Matrix, a: &Matrix, b: &[f64]) -> Result<Matrix> {
    if a.rows() != a.cols() || a.cols() != x.rows() {
        return Err(DadlError::dims("linear_shift matrix", x.rows(), a.cols()));
    }
    if b.len() != x.rows() {
        return Err(DadlError::dims("linear_shift offset", x.rows(), b.len()));
    }
    let mut out = a.matmul(x)?;
    for (i, &bi) in b.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|v| *v += bi);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    height: usize,
    width: usize,
    seed: u64,
    samples: usize,
    classes: usize,
}

/// Writes `images.mat`, `labels.csv` (`index,label`) and `dataset.json`.
pub fn save_dataset(ds: &ToyImageDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    save_matrix(&ds.images, dir.join("images.mat"))?;
    save_labels(&ds.labels, dir.join("labels.csv"))?;
    let meta = DatasetMeta {
        height: ds.height,
        width: ds.width,
        seed: ds.seed,
        samples: ds.len(),
        classes: ds.n_classes(),
    };
    fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<ToyImageDataset> {
    let dir = dir.as_ref();
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(dir.join("dataset.json"))?)?;
    let images = load_matrix(dir.join("images.mat"))?;
    let labels = load_labels(dir.join("labels.csv"))?;
    if images.rows() != meta.height * meta.width || images.cols() != labels.len() {
        return Err(DadlError::Format(format!(
            "dataset shape mismatch: {}x{} images, {} labels, {}x{} pixels",
            images.rows(),
            images.cols(),
            labels.len(),
            meta.height,
            meta.width
        )));
    }
    Ok(ToyImageDataset {
        images,
        labels,
        height: meta.height,
        width: meta.width,
        seed: meta.seed,
    })
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(["index", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        wr.write_record([i.to_string(), l.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads an `index,label` CSV; indices must run `0, 1, 2, …`.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<usize> {
            rec.get(k)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| DadlError::Format(format!("labels row {row}: bad field {k}")))
        };
        if parse(0)? != row {
            return Err(DadlError::Format(format!("labels row {row}: index out of order")));
        }
        out.push(parse(1)?);
    }
    Ok(out)
}
