//! Subcommand implementations. Shared input loading lives here: inputs
//! that are missing or malformed are usage errors (exit 2), failures past
//! that point are runtime errors (exit 1).

pub mod eval;
pub mod gen;
pub mod repl;
pub mod rewrite;
pub mod train;

use std::path::Path;

use anyhow::anyhow;
use rwnet_core::corpus::Corpus;
use rwnet_core::model::Model;
use rwnet_core::rule::RuleSet;

use crate::config::ExperimentConfig;
use crate::{CliError, CliResult};

pub(crate) fn load_rules(cfg: &ExperimentConfig) -> CliResult<RuleSet> {
    if !cfg.rules.is_file() {
        return Err(CliError::usage(anyhow!(
            "rule set not found: {}",
            cfg.rules.display()
        )));
    }
    let goal = cfg.goal().map_err(CliError::Usage)?;
    RuleSet::from_file(&cfg.rules, goal)
        .map_err(|e| CliError::usage(anyhow!("{}: {e}", cfg.rules.display())))
}

pub(crate) fn load_corpus(cfg: &ExperimentConfig) -> CliResult<Corpus> {
    let dir = cfg.data_dir();
    if !dir.join("schemes.jsonl").is_file() {
        return Err(CliError::usage(anyhow!(
            "no corpus in {} (expected schemes.jsonl and manifest.json; run `rwnet gen` first)",
            dir.display()
        )));
    }
    Corpus::load(dir).map_err(|e| CliError::usage(anyhow!("{}: {e}", dir.display())))
}

pub(crate) fn load_model(path: &Path) -> CliResult<Model> {
    if !path.is_file() {
        return Err(CliError::usage(anyhow!(
            "model not found: {} (run `rwnet train` first)",
            path.display()
        )));
    }
    Model::load(path).map_err(|e| CliError::usage(anyhow!("{e}")))
}
