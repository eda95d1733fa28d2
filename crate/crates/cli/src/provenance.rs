//! Provenance records: every command that writes artifacts drops a JSON
//! file beside them with the resolved configuration, its hash, the seed,
//! and the crate versions, so any output can be traced back to an exact
//! rerunnable invocation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Serialize)]
struct Provenance {
    command: &'static str,
    seed: u64,
    config_sha256: String,
    versions: BTreeMap<&'static str, &'static str>,
    config: BTreeMap<String, String>,
}

/// Hash of the resolved configuration in its canonical `key=value` line
/// form. Two runs with equal hashes saw identical configurations.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in cfg.to_map() {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes `provenance-<command>.json` into `dir`.
pub fn write(dir: &Path, command: &'static str, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let record = Provenance {
        command,
        seed: cfg.seed,
        config_sha256: config_hash(cfg),
        versions: BTreeMap::from([
            ("rwnet-cli", env!("CARGO_PKG_VERSION")),
            ("rwnet-core", rwnet_core::VERSION),
        ]),
        config: cfg.to_map(),
    };
    let path = dir.join(format!("provenance-{command}.json"));
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}
