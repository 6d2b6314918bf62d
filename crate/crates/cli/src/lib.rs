//! Library side of the `mapfrag` binary: config parsing, command execution
//! and artifact rendering. The binary is a thin wrapper around [`execute`].

#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use mapfrag_core::map_sim::McConfig;
use serde_json::json;
use sha2::{Digest, Sha256};

use config::RunConfig;
use error::CliError;
use output::Meta;

pub const TOOL: &str = "mapfrag";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
}

/// A rendered artifact plus where it goes.
#[derive(Debug)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    /// `None` writes to stdout.
    pub path: Option<String>,
    /// Names of failed checks when `validate` found a violation.
    pub failure: Option<String>,
}

/// SHA-256 of the canonical JSON of model, command and the effective Monte
/// Carlo settings. Worker count and output settings are left out because they
/// do not change results.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mc = cfg.mc.map(|m| json!({"n_samples": m.n_samples, "seed": m.seed}));
    // serde_json's default map is a BTreeMap, so keys come out sorted.
    let doc = json!({"model": cfg.model, "command": cfg.command, "mc": mc});
    let bytes = serde_json::to_vec(&doc).expect("config values serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub fn execute(doc: &str, ov: &Overrides) -> Result<Artifact, CliError> {
    let (mut cfg, model) = config::parse_config(doc)?;
    if let Some(mc) = cfg.mc.as_mut() {
        if ov.seed.is_some() {
            mc.seed = ov.seed;
        }
        if ov.workers.is_some() {
            mc.workers = ov.workers;
        }
    }
    let mc = match cfg.mc {
        Some(m) if cfg.command.samples() => {
            let seed =
                m.seed.ok_or_else(|| CliError::Config("a seed is required: set mc.seed or pass --seed".into()))?;
            Some(McConfig { n_samples: m.n_samples, seed, workers: m.workers.unwrap_or(0) })
        }
        _ => None,
    };
    let meta = Meta {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: cfg.command.name().into(),
        config_sha256: config_hash(&cfg),
        seed: mc.map(|m| m.seed),
    };
    let outcome = run::run(&cfg, &model, mc)?;
    let bytes = output::render(&outcome.report, &meta, cfg.output.format)?;
    Ok(Artifact { bytes, path: ov.out.clone().or_else(|| cfg.output.path.clone()), failure: outcome.failure })
}
