//! End-to-end experiments: build source/target splits, adapt, recover
//! source features, reduce the augmented features by PCA and classify.
//!
//! Each trial also scores the same classifier on the raw features as the
//! no-adaptation baseline. The classifier is 1-NN or a one-vs-rest ridge
//! model.

mod classify;
mod report;

pub use classify::{accuracy, classify, ClassifierKind, RIDGE_SCALE};
pub use report::{write_report, ExperimentReport, PhaseEntry, PhaseTimes, TrialReport, WallClock};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain_path::{adapt, augment_features, recover_source, AdaptConfig};
use crate::domain_synth::{
    gaussian_blur_shift, linear_shift, load_labels, make_toy_dataset, motion_blur_shift,
    ToyImageDataset,
};
use crate::numerics::io::load_matrix;
use crate::numerics::{pca_fit, Matrix, PcaTarget};
use crate::{DadlError, Result};

const ROLE_DATA: u64 = 11;
const ROLE_ADAPT: u64 = 12;
const ROLE_AFFINE: u64 = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Toy images; each class gets `2 * per_class` samples split alternately
    /// into source and target.
    Toy {
        classes: usize,
        per_class: usize,
        height: usize,
        width: usize,
    },
    /// Pre-built matrices and `index,label` CSVs. Blur shifts need
    /// `image_shape = [height, width]`.
    Files {
        source: PathBuf,
        source_labels: PathBuf,
        target: PathBuf,
        target_labels: PathBuf,
        #[serde(default)]
        image_shape: Option<[usize; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ShiftSpec {
    None,
    Gaussian {
        sigma: f64,
    },
    Motion {
        length: usize,
        #[serde(default = "default_theta")]
        theta_deg: f64,
    },
    /// `x ↦ (scale·I + perturbation·G/√d) x + offset`, `G` seeded standard
    /// normal.
    Affine {
        scale: f64,
        #[serde(default)]
        perturbation: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn default_theta() -> f64 {
    135.0
}

fn default_pca() -> PcaTarget {
    PcaTarget::VarianceFraction(0.99)
}
fn default_classifier() -> ClassifierKind {
    ClassifierKind::NearestNeighbor
}
fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub shift: ShiftSpec,
    #[serde(default)]
    pub adapt: AdaptConfig,
    #[serde(default = "default_pca")]
    pub pca: PcaTarget,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| DadlError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DadlError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DadlError::Config(m));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        self.adapt.validate()?;
        match &self.dataset {
            DatasetSpec::Toy { classes, per_class, height, width } => {
                if *classes < 2 || *per_class < 2 || *height == 0 || *width == 0 {
                    return bad("toy dataset needs classes >= 2, per_class >= 2 and a positive size".into());
                }
            }
            DatasetSpec::Files { source, source_labels, target, target_labels, image_shape } => {
                for p in [source, source_labels, target, target_labels] {
                    if !p.exists() {
                        return bad(format!("dataset file {} does not exist", p.display()));
                    }
                }
                let blur = matches!(self.shift, ShiftSpec::Gaussian { .. } | ShiftSpec::Motion { .. });
                if blur && image_shape.is_none() {
                    return bad("blur shifts on file datasets need image_shape".into());
                }
            }
        }
        match self.shift {
            ShiftSpec::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                bad(format!("gaussian sigma must be >= 0, got {sigma}"))
            }
            ShiftSpec::Motion { length, .. } if length.is_multiple_of(2) => {
                bad(format!("motion length must be odd, got {length}"))
            }
            _ => Ok(()),
        }
    }
}

/// Labeled source and target of one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub x_s: Matrix,
    pub y_s: Vec<usize>,
    pub x_t: Matrix,
    pub y_t: Vec<usize>,
}

/// Shifted copy of `ds.images`; `seed` drives the affine perturbation.
pub fn apply_shift(ds: &ToyImageDataset, shift: &ShiftSpec, seed: u64) -> Result<Matrix> {
    Ok(match *shift {
        ShiftSpec::None => ds.images.clone(),
        ShiftSpec::Gaussian { sigma } => gaussian_blur_shift(ds, sigma)?.images,
        ShiftSpec::Motion { length, theta_deg } => motion_blur_shift(ds, length, theta_deg)?.images,
        ShiftSpec::Affine { .. } => affine(&ds.images, shift, seed)?,
    })
}

fn affine(x: &Matrix, shift: &ShiftSpec, seed: u64) -> Result<Matrix> {
    let ShiftSpec::Affine { scale, perturbation, offset } = *shift else {
        unreachable!("affine called with non-affine shift")
    };
    let d = x.rows();
    let mut rng = crate::rng::seeded(crate::rng::derive(seed, ROLE_AFFINE));
    let root = (d as f64).sqrt();
    let a = Matrix::from_fn(d, d, |i, j| {
        let g: f64 = StandardNormal.sample(&mut rng);
        perturbation * g / root + if i == j { scale } else { 0.0 }
    });
    linear_shift(x, &a, &vec![offset; d])
}

/// Source and target for trial `trial`.
pub fn trial_data(cfg: &ExperimentConfig, trial: usize) -> Result<TrialData> {
    let seed = trial_seed(cfg, trial);
    match &cfg.dataset {
        DatasetSpec::Toy { classes, per_class, height, width } => {
            let ds = make_toy_dataset(*classes, 2 * per_class, *height, *width, seed)?;
            let (src, tgt): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| i % 2 == 0);
            let (src, tgt) = (ds.subset(&src), ds.subset(&tgt));
            Ok(TrialData {
                x_t: apply_shift(&tgt, &cfg.shift, seed)?,
                y_t: tgt.labels,
                x_s: src.images,
                y_s: src.labels,
            })
        }
        DatasetSpec::Files { source, source_labels, target, target_labels, image_shape } => {
            let x_s = load_matrix(source)?;
            let x_t = load_matrix(target)?;
            let y_s = load_labels(source_labels)?;
            let y_t = load_labels(target_labels)?;
            if y_s.len() != x_s.cols() || y_t.len() != x_t.cols() {
                return Err(DadlError::Config("label count does not match sample count".into()));
            }
            let (h, w) = image_shape.map_or((x_t.rows(), 1), |[h, w]| (h, w));
            if h * w != x_t.rows() {
                return Err(DadlError::Config(format!("image_shape {h}x{w} does not match d = {}", x_t.rows())));
            }
            let tgt = ToyImageDataset { images: x_t, labels: y_t, height: h, width: w, seed };
            Ok(TrialData {
                x_t: apply_shift(&tgt, &cfg.shift, seed)?,
                y_t: tgt.labels,
                x_s,
                y_s,
            })
        }
    }
}

pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    crate::rng::derive(crate::rng::derive(cfg.seed, ROLE_DATA), trial as u64)
}

/// Outcome of one trial before aggregation.
struct TrialRun {
    report: TrialReport,
    times: PhaseTimes,
}

/// The adaptation settings of one trial: `cfg.adapt` with a per-trial seed.
pub fn trial_adapt_config(cfg: &ExperimentConfig, trial: usize) -> AdaptConfig {
    AdaptConfig {
        seed: crate::rng::derive(trial_seed(cfg, trial), ROLE_ADAPT),
        ..cfg.adapt.clone()
    }
}

fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRun {
    let seed = trial_seed(cfg, trial);
    let mut times = PhaseTimes { trial, ..Default::default() };
    let mut report = TrialReport {
        trial,
        seed,
        ..Default::default()
    };
    let clock = Instant::now();
    let result = (|| -> Result<()> {
        let data = trial_data(cfg, trial)?;
        times.data_s = clock.elapsed().as_secs_f64();
        report.phase_log.push(PhaseEntry::new("data", &["config"]));

        let t0 = Instant::now();
        let base = classify(&data.x_s, &data.y_s, &data.x_t, cfg.classifier)?;
        report.baseline_accuracy = Some(accuracy(&base, &data.y_t));
        report.phase_log.push(PhaseEntry::new("baseline", &["x_s", "y_s", "x_t"]));
        times.baseline_s = t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let adapt_cfg = trial_adapt_config(cfg, trial);
        let path = adapt(&data.x_s, &data.x_t, &adapt_cfg)?;
        report.residue_curve = path.residue_curve();
        report.n_domains = path.specifics.len();
        report.converged = path.converged;
        report.truncated = path.truncated;
        report.phase_log.push(PhaseEntry::new("adapt", &["x_s", "x_t"]));
        times.adapt_s = t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let src = recover_source(&path, &data.x_s, adapt_cfg.t)?;
        let codes = &path.target_codes;
        let (aug_s, aug_t) = augment_features(&path, &src, &codes.z, &codes.gamma)?;
        report.phase_log.push(PhaseEntry::new("recover", &["path", "x_s"]));
        times.recover_s = t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let pca = pca_fit(&aug_s.hstack(&aug_t)?, cfg.pca)?;
        report.pca_dim = pca.dim();
        let pred = classify(&pca.apply(&aug_s)?, &data.y_s, &pca.apply(&aug_t)?, cfg.classifier)?;
        report.dadl_accuracy = Some(accuracy(&pred, &data.y_t));
        report.phase_log.push(PhaseEntry::new("classify", &["aug_s", "y_s", "aug_t"]));
        times.classify_s = t0.elapsed().as_secs_f64();
        Ok(())
    })();
    if let Err(e) = result {
        report.error = Some(e.to_string());
    }
    times.total_s = clock.elapsed().as_secs_f64();
    TrialRun { report, times }
}

/// Run every trial (concurrently, collected in trial order) and aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let runs: Vec<TrialRun> = (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect();
    let (trials, phases): (Vec<_>, Vec<_>) = runs.into_iter().map(|r| (r.report, r.times)).unzip();
    Ok(ExperimentReport::assemble(
        cfg.clone(),
        trials,
        WallClock {
            total_s: clock.elapsed().as_secs_f64(),
            trials: phases,
        },
    ))
}
