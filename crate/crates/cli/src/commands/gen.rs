//! `rwnet gen`: generate a corpus and print its yield statistics.

use anyhow::Context;
use rwnet_core::corpus::gen_corpus;

use crate::config::ExperimentConfig;
use crate::{provenance, CliResult};

pub fn run(cfg: &ExperimentConfig) -> CliResult<()> {
    let rs = super::load_rules(cfg)?;
    let spec = cfg.generator_spec();
    let corpus = gen_corpus(&spec, &rs).context("corpus generation failed")?;
    corpus
        .save(&cfg.out)
        .with_context(|| format!("cannot save corpus to {}", cfg.out.display()))?;
    provenance::write(&cfg.out, "gen", cfg)?;

    let r = &corpus.report;
    println!("corpus written to {}", cfg.out.display());
    println!("  questions attempted: {}", r.requested);
    println!("  schemes retained:    {}", r.solved);
    println!(
        "  discarded:           {} unsolved, {} over depth budget, {} over position budget",
        r.discarded_unsolved, r.discarded_too_deep, r.discarded_step_depth
    );
    println!(
        "  steps:               {} total, {} train / {} test",
        r.total_steps,
        corpus.train.len(),
        corpus.test.len()
    );
    Ok(())
}
