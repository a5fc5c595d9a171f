//! Command-line front end for `vibdsde-core`: JSON configuration, the five
//! pipelines (`forward`, `solve`, `field`, `rate`, `verify`) and
//! deterministic CSV/JSON artifacts with a hashed manifest.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::output::{json_bytes, sha256_hex, write_all, Artifact};

/// What a finished invocation produced.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: Option<PathBuf>,
    pub manifest: Value,
    pub exit_code: i32,
    pub error: Option<CliError>,
}

/// Hash of the resolved configuration, stable across runs.
pub fn config_hash(cfg: &RunConfig) -> String {
    let compact = serde_json::to_vec(cfg).expect("config always serializes");
    sha256_hex(&compact)
}

/// Loads, runs and writes everything under the output directory. The
/// manifest is written for runtime and verification failures too; config
/// errors only produce one when `--out` names a directory.
pub fn run(config_path: &Path, overrides: &Overrides) -> RunReport {
    let cfg = match config::load(config_path).and_then(|c| c.apply(overrides)) {
        Ok(c) => c,
        Err(e) => {
            let manifest = json!({
                "status": "error",
                "error": {"category": e.category(), "message": e.to_string()},
            });
            let out_dir = overrides.out.as_ref().map(PathBuf::from);
            if let Some(dir) = &out_dir {
                let _ = write_all(dir, &[Artifact::new("manifest.json", json_bytes(&manifest))]);
            }
            return RunReport { out_dir, manifest, exit_code: e.exit_code(), error: Some(e) };
        }
    };
    run_config(&cfg)
}

pub fn run_config(cfg: &RunConfig) -> RunReport {
    let hash = config_hash(cfg);
    let dir = PathBuf::from(&cfg.output.dir);
    let result = commands::execute(cfg, &hash);
    let (artifacts, summary, error) = match result {
        Ok(o) if o.passed => (o.artifacts, o.summary, None),
        Ok(o) => {
            let e = CliError::VerificationFailed(format!(
                "{} reported a failed check",
                cfg.command.map_or("run", |c| c.name())
            ));
            (o.artifacts, o.summary, Some(e))
        }
        Err(e) => (Vec::new(), Value::Null, Some(e)),
    };
    let status = match &error {
        None => "ok",
        Some(CliError::VerificationFailed(_)) => "verification_failed",
        Some(_) => "error",
    };
    let files: serde_json::Map<String, Value> =
        artifacts.iter().map(|a| (a.name.clone(), json!(sha256_hex(&a.bytes)))).collect();
    let manifest = json!({
        "command": cfg.command.map(|c| c.name()),
        "status": status,
        "seed": cfg.seed(),
        "scenario_seed": cfg.scenario_seed(),
        "config": cfg,
        "config_hash": hash,
        "files": files,
        "summary": summary,
        "error": error.as_ref().map(|e| json!({"category": e.category(), "message": e.to_string()})),
    });
    let mut all = artifacts;
    all.push(Artifact::new("manifest.json", json_bytes(&manifest)));
    let (exit_code, error) = match write_all(&dir, &all) {
        Ok(()) => (error.as_ref().map_or(0, CliError::exit_code), error),
        Err(io) => (io.exit_code(), Some(io)),
    };
    RunReport { out_dir: Some(dir), manifest, exit_code, error }
}

/// Parses `VIBDSDE_SEED` lazily; the value is validated with the config.
pub fn env_seed() -> Option<String> {
    std::env::var("VIBDSDE_SEED").ok()
}
