//! `dadl`: learn domain paths, encode features, run experiments and build
//! synthetic datasets.
//!
//! Exit status is 0 on success, 2 for bad input or configuration and 3 when
//! the numerics fail.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dadl_core::domain_path::{
    adapt, augment_side, encode_target, load_path, recover_source, save_path, AdaptConfig,
};
use dadl_core::domain_synth::{load_dataset, make_toy_dataset, save_dataset, ToyImageDataset};
use dadl_core::numerics::io::{load_matrix, save_matrix};
use dadl_core::pipeline::{apply_shift, run_experiment, write_report, ExperimentConfig, ShiftSpec};
use dadl_core::{DadlError, Matrix, Result};

#[derive(Parser)]
#[command(name = "dadl", version, about = "Domain-adaptive dictionary learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a domain path from unlabeled source and target data.
    Adapt(AdaptArgs),
    /// Map data onto a saved path and write its augmented features.
    Encode(EncodeArgs),
    /// Run a configured experiment and write its report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a toy dataset or shift an existing one.
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct AdaptArgs {
    /// Matrix file (`.csv` or binary, one sample per column) or dataset directory.
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Stop once `‖ΔD‖_F` falls to this value.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    max_domains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Source,
    Target,
}

#[derive(clap::Args)]
struct EncodeArgs {
    /// Directory written by `dadl adapt`.
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    side: Side,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Toy,
    Gaussian,
    Motion,
    Affine,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    /// Dataset directory to shift (all kinds except `toy`).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 30)]
    per_class: usize,
    #[arg(long, default_value_t = 16)]
    height: usize,
    #[arg(long, default_value_t = 16)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 5)]
    length: usize,
    #[arg(long, default_value_t = 135.0)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    perturbation: f64,
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
}

fn read_samples(path: &Path) -> Result<Matrix> {
    if path.is_dir() {
        Ok(load_dataset(path)?.images)
    } else {
        load_matrix(path)
    }
}

fn run_adapt(a: AdaptArgs) -> Result<()> {
    let d = AdaptConfig::default();
    let cfg = AdaptConfig {
        n: a.n.unwrap_or(d.n),
        t: a.t.unwrap_or(d.t),
        lambda: a.lambda.unwrap_or(d.lambda),
        eta: a.eta.unwrap_or(d.eta),
        delta_stop: a.delta,
        max_domains: a.max_domains.unwrap_or(d.max_domains),
        dict_iters: d.dict_iters,
        seed: a.seed.unwrap_or(d.seed),
    };
    cfg.validate()?;
    let path = adapt(&read_samples(&a.source)?, &read_samples(&a.target)?, &cfg)?;
    save_path(&path, &a.out)?;
    let state = if path.converged { "converged" } else { "truncated" };
    println!(
        "{} domains ({state}), final residue {:.6}, written to {}",
        path.specifics.len(),
        path.residue_curve().last().copied().unwrap_or(f64::NAN),
        a.out.display()
    );
    Ok(())
}

fn run_encode(a: EncodeArgs) -> Result<()> {
    let path = load_path(&a.path)?;
    let x = read_samples(&a.input)?;
    let t = path.config.t;
    let features = match a.side {
        Side::Source => {
            let rec = recover_source(&path, &x, t)?;
            augment_side(&path, &rec.z_final, &rec.gamma_final)?
        }
        Side::Target => {
            let codes = encode_target(&path, &x, t)?;
            augment_side(&path, &codes.z, &codes.gamma)?
        }
    };
    save_matrix(&features, &a.out)?;
    println!("{}x{} features written to {}", features.rows(), features.cols(), a.out.display());
    Ok(())
}

/// Returns whether every trial completed.
fn run_experiment_cmd(config: &Path, out: &Path) -> Result<bool> {
    let cfg = ExperimentConfig::load(config)?;
    let report = run_experiment(&cfg)?;
    write_report(&report, out)?;
    println!(
        "{}/{} trials: dadl {:.4} ± {:.4}, baseline {:.4} ± {:.4}",
        report.completed_trials,
        report.trials.len(),
        report.dadl_mean,
        report.dadl_std,
        report.baseline_mean,
        report.baseline_std
    );
    for t in report.trials.iter().filter(|t| t.error.is_some()) {
        eprintln!("trial {} failed: {}", t.trial, t.error.as_deref().unwrap_or_default());
    }
    Ok(!report.partial)
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let shift = match a.kind {
        SynthKind::Toy => None,
        SynthKind::Gaussian => Some(ShiftSpec::Gaussian { sigma: a.sigma }),
        SynthKind::Motion => Some(ShiftSpec::Motion { length: a.length, theta_deg: a.theta }),
        SynthKind::Affine => Some(ShiftSpec::Affine {
            scale: a.scale,
            perturbation: a.perturbation,
            offset: a.offset,
        }),
    };
    let ds = match shift {
        None => make_toy_dataset(a.classes, a.per_class, a.height, a.width, a.seed)?,
        Some(shift) => {
            let input = a
                .input
                .as_ref()
                .ok_or_else(|| DadlError::Config("--input is required to shift a dataset".into()))?;
            let base = load_dataset(input)?;
            let images = apply_shift(&base, &shift, a.seed)?;
            ToyImageDataset { images, ..base }
        }
    };
    save_dataset(&ds, &a.out)?;
    println!("{} samples of {}x{} written to {}", ds.len(), ds.height, ds.width, a.out.display());
    Ok(())
}

fn exit_code(e: &DadlError) -> ExitCode {
    ExitCode::from(if e.is_numerical() { 3 } else { 2 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Adapt(a) => run_adapt(a),
        Command::Encode(a) => run_encode(a),
        Command::Experiment { config, out } => match run_experiment_cmd(&config, &out) {
            Ok(true) => Ok(()),
            // Trial failures are caught per trial; the report is already written.
            Ok(false) => return ExitCode::from(3),
            Err(e) => Err(e),
        },
        Command::Synth(a) => run_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
