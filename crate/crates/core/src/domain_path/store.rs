//! On-disk layout of a [`DomainPath`]:
//!
//! ```text
//! common.mat  common.json
//! specific_000.mat  specific_000.json  ...  specific_NNN.mat  specific_NNN.json
//! target.mat  target.json
//! target_z.mat  target_gamma.mat
//! xt_k/xt_000.mat ... xt_k/xt_NNN.mat
//! path.json   steps.csv
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdaptConfig, DomainPath, StepRecord};
use crate::numerics::io::{load_matrix, save_matrix};
use crate::sparse_coding::{Dictionary, JointCodePair, SparseCode};
use crate::{DadlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryRole {
    Common,
    Source,
    Target,
    Intermediate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    role: DictionaryRole,
    n: usize,
    d: usize,
    t: usize,
    lambda: f64,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathManifest {
    config: AdaptConfig,
    delta_stop: f64,
    converged: bool,
    truncated: bool,
    n_domains: usize,
    step_log: Vec<StepRecord>,
}

fn write_dict(dir: &Path, stem: &str, d: &Dictionary, role: DictionaryRole, cfg: &AdaptConfig) -> Result<()> {
    save_matrix(d.atoms(), dir.join(format!("{stem}.mat")))?;
    let side = Sidecar {
        role,
        n: d.len(),
        d: d.dim(),
        t: cfg.t,
        lambda: cfg.lambda,
        seed: cfg.seed,
    };
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

fn read_dict(dir: &Path, stem: &str) -> Result<Dictionary> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let d = Dictionary::new(load_matrix(dir.join(format!("{stem}.mat")))?)?;
    if d.len() != side.n || d.dim() != side.d {
        return Err(DadlError::Format(format!(
            "{stem}: sidecar says {}x{}, matrix is {}x{}",
            side.d,
            side.n,
            d.dim(),
            d.len()
        )));
    }
    Ok(d)
}

pub fn save_path(path: &DomainPath, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let cfg = &path.config;
    fs::create_dir_all(dir.join("xt_k"))?;
    write_dict(dir, "common", &path.d_common, DictionaryRole::Common, cfg)?;
    write_dict(dir, "target", &path.d_target, DictionaryRole::Target, cfg)?;
    for (k, d) in path.specifics.iter().enumerate() {
        let role = if k == 0 {
            DictionaryRole::Source
        } else {
            DictionaryRole::Intermediate
        };
        write_dict(dir, &format!("specific_{k:03}"), d, role, cfg)?;
    }
    for (k, x) in path.x_t_intermediate.iter().enumerate() {
        save_matrix(x, dir.join("xt_k").join(format!("xt_{k:03}.mat")))?;
    }
    save_matrix(path.target_codes.z.coeffs(), dir.join("target_z.mat"))?;
    save_matrix(path.target_codes.gamma.coeffs(), dir.join("target_gamma.mat"))?;

    let manifest = PathManifest {
        config: cfg.clone(),
        delta_stop: path.delta_stop,
        converged: path.converged,
        truncated: path.truncated,
        n_domains: path.specifics.len(),
        step_log: path.step_log.clone(),
    };
    fs::write(dir.join("path.json"), serde_json::to_string_pretty(&manifest)?)?;

    let mut wr = csv::Writer::from_path(dir.join("steps.csv"))?;
    wr.write_record(["k", "delta_norm", "residue_norm"])?;
    for s in &path.step_log {
        wr.write_record([s.k.to_string(), s.delta_norm.to_string(), s.residue_norm.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn load_path(dir: impl AsRef<Path>) -> Result<DomainPath> {
    let dir = dir.as_ref();
    let manifest: PathManifest = serde_json::from_str(&fs::read_to_string(dir.join("path.json"))?)?;
    if manifest.n_domains == 0 {
        return Err(DadlError::Format("path.json lists no domains".into()));
    }
    let d_common = read_dict(dir, "common")?;
    let d_target = read_dict(dir, "target")?;
    let specifics = (0..manifest.n_domains)
        .map(|k| read_dict(dir, &format!("specific_{k:03}")))
        .collect::<Result<Vec<_>>>()?;
    let x_t_intermediate = (0..manifest.n_domains)
        .map(|k| load_matrix(dir.join("xt_k").join(format!("xt_{k:03}.mat"))))
        .collect::<Result<Vec<_>>>()?;
    let t = manifest.config.t;
    let target_codes = JointCodePair {
        z: SparseCode::new(load_matrix(dir.join("target_z.mat"))?, t)?,
        gamma: SparseCode::new(load_matrix(dir.join("target_gamma.mat"))?, t)?,
    };
    Ok(DomainPath {
        config: manifest.config,
        delta_stop: manifest.delta_stop,
        d_common,
        specifics,
        d_target,
        x_t_intermediate,
        step_log: manifest.step_log,
        target_codes,
        converged: manifest.converged,
        truncated: manifest.truncated,
    })
}
