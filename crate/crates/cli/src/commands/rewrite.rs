//! `rwnet rewrite`: guided rewriting of one expression, printed step by
//! step.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use rwnet_core::guide::{human_like_rewrite, write_traces, GuideLimits};
use rwnet_core::term::Term;

use crate::config::ExperimentConfig;
use crate::{provenance, CliError, CliResult};

pub fn run(cfg: &ExperimentConfig, expr: &str, trace_out: Option<&Path>) -> CliResult<()> {
    let rs = super::load_rules(cfg)?;
    let question = Term::parse(expr).map_err(|e| CliError::usage(anyhow!("{e}")))?;
    let model = super::load_model(&cfg.model_path())?;

    let limits = GuideLimits {
        max_steps: cfg.max_steps,
        rank_cap: if cfg.rank_cap == 0 { None } else { Some(cfg.rank_cap) },
    };
    let trace = human_like_rewrite(&model, &question, &rs, &limits);

    for step in &trace.steps {
        println!(
            "{}  --{}@{}-->  {}",
            step.source,
            rs.rule(step.rule_index).name(),
            step.position,
            step.target
        );
    }
    println!("outcome: {}", trace.outcome);
    println!("final: {}", trace.answer());

    if let Some(path) = trace_out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        write_traces(&mut file, &[trace], &rs)
            .with_context(|| format!("cannot write {}", path.display()))?;
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        provenance::write(dir.unwrap_or(Path::new(".")), "rewrite", cfg)?;
        println!("trace appended to {}", path.display());
    }
    Ok(())
}
