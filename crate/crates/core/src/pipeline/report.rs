use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub baseline_accuracy: Option<f64>,
    pub dadl_accuracy: Option<f64>,
    /// `‖J^k‖_F` for `k = 0..=N`.
    pub residue_curve: Vec<f64>,
    /// `N + 1`.
    pub n_domains: usize,
    pub converged: bool,
    pub truncated: bool,
    pub pca_dim: usize,
    /// Phases in execution order with the data each one read.
    pub phase_log: Vec<PhaseEntry>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub phase: String,
    pub inputs: Vec<String>,
}

impl PhaseEntry {
    pub(crate) fn new(phase: &str, inputs: &[&str]) -> Self {
        Self {
            phase: phase.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Seconds spent per phase of one trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub trial: usize,
    pub data_s: f64,
    pub baseline_s: f64,
    pub adapt_s: f64,
    pub recover_s: f64,
    pub classify_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub total_s: f64,
    pub trials: Vec<PhaseTimes>,
}

/// Everything except `wall_clock` is a deterministic function of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialReport>,
    pub completed_trials: usize,
    /// Some trial failed; aggregates cover completed trials only.
    pub partial: bool,
    pub dadl_mean: f64,
    pub dadl_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub wall_clock: WallClock,
}

/// Mean and sample standard deviation (0 for fewer than two values).
fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ExperimentReport {
    pub(crate) fn assemble(config: ExperimentConfig, trials: Vec<TrialReport>, wall_clock: WallClock) -> Self {
        let done: Vec<&TrialReport> = trials
            .iter()
            .filter(|t| t.error.is_none() && t.dadl_accuracy.is_some())
            .collect();
        let (dadl_mean, dadl_std) = mean_std(&done.iter().filter_map(|t| t.dadl_accuracy).collect::<Vec<_>>());
        let (baseline_mean, baseline_std) =
            mean_std(&done.iter().filter_map(|t| t.baseline_accuracy).collect::<Vec<_>>());
        Self {
            completed_trials: done.len(),
            partial: done.len() < trials.len(),
            config,
            trials,
            dadl_mean,
            dadl_std,
            baseline_mean,
            baseline_std,
            wall_clock,
        }
    }

    /// Per-trial `(baseline, dadl)` for completed trials.
    pub fn paired(&self) -> Vec<(f64, f64)> {
        self.trials
            .iter()
            .filter_map(|t| Some((t.baseline_accuracy?, t.dadl_accuracy?)))
            .collect()
    }
}

/// Writes `report.json`, `residue.csv` (`trial,k,residue_norm`) and
/// `accuracy.csv` (`trial,seed,baseline,dadl`).
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;

    let mut wr = csv::Writer::from_path(dir.join("residue.csv"))?;
    wr.write_record(["trial", "k", "residue_norm"])?;
    for t in &report.trials {
        for (k, r) in t.residue_curve.iter().enumerate() {
            wr.write_record([t.trial.to_string(), k.to_string(), r.to_string()])?;
        }
    }
    wr.flush()?;

    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut wr = csv::Writer::from_path(dir.join("accuracy.csv"))?;
    wr.write_record(["trial", "seed", "baseline", "dadl"])?;
    for t in &report.trials {
        wr.write_record([
            t.trial.to_string(),
            t.seed.to_string(),
            opt(t.baseline_accuracy),
            opt(t.dadl_accuracy),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
