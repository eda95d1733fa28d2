//! `rwnet eval`: score a model's step predictions on a corpus split and
//! write the full report as JSON.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{anyhow, Context};
use rwnet_core::guide::evaluate_error_rate;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::{provenance, CliError, CliResult};

#[derive(Copy, Clone, PartialEq, Eq)]
pub enum Split {
    Test,
    Train,
    All,
}

impl Split {
    fn label(self) -> &'static str {
        match self {
            Split::Test => "test",
            Split::Train => "train",
            Split::All => "all",
        }
    }
}

#[derive(Serialize)]
struct TaskJson {
    total: usize,
    errors: usize,
    error_rate_percent: f64,
}

#[derive(Serialize)]
struct EvalJson {
    model: String,
    split: &'static str,
    n_total: usize,
    n_error: usize,
    error_rate_percent: f64,
    invalid_action_errors: usize,
    invalid_action_rate_percent: f64,
    encode_failures: usize,
    rank_histogram: Vec<usize>,
    per_task: BTreeMap<String, TaskJson>,
}

pub fn run(cfg: &ExperimentConfig, split: Split) -> CliResult<()> {
    let rs = super::load_rules(cfg)?;
    let corpus = super::load_corpus(cfg)?;
    let model = super::load_model(&cfg.model_path())?;

    if model.rule_names() != rs.rule_names().as_slice() {
        return Err(CliError::usage(anyhow!(
            "model was trained against a different rule set ({} rules vs {})",
            model.rule_names().len(),
            rs.len()
        )));
    }
    let corpus_vocab = corpus.vocabulary(&rs, cfg.fresh_reserve);
    if model.vocab().tokens() != corpus_vocab.tokens() {
        return Err(CliError::usage(anyhow!(
            "model vocabulary does not match this corpus; evaluate on the corpus the model was trained from"
        )));
    }

    let (train_steps, test_steps) = corpus
        .split_examples(&rs)
        .map_err(|e| CliError::usage(anyhow!("{e}")))?;
    let examples = match split {
        Split::Test => test_steps,
        Split::Train => train_steps,
        Split::All => {
            let mut all = train_steps;
            all.extend(test_steps);
            all
        }
    };

    let report = evaluate_error_rate(&model, &rs, &examples)
        .map_err(|e| CliError::usage(anyhow!("{e}")))?;

    let tag = format!(
        "FNN{}+{}",
        model.params().hidden_layers().len(),
        model.options().code_tag()
    );
    println!("evaluation of {tag} on the {} split", split.label());
    println!("  N_Total: {}", report.total);
    println!("  N_Error: {}", report.errors);
    println!("  error rate: {:.2}%", report.error_rate());
    println!(
        "  invalid-action errors: {} ({:.2}%)",
        report.invalid_action_errors,
        report.invalid_action_rate()
    );
    println!("  encode failures: {}", report.encode_failures);
    let nonzero: Vec<String> = report
        .rank_histogram
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(i, c)| format!("{}:{c}", i + 1))
        .collect();
    let shown = nonzero.len().min(12);
    print!("  rank histogram (rank:count): {}", nonzero[..shown].join(" "));
    if nonzero.len() > shown {
        print!(" (+{} more ranks)", nonzero.len() - shown);
    }
    println!();
    println!("  per task:");
    for (task, stats) in &report.per_task {
        println!(
            "    {task}: {}/{} errors ({:.2}%)",
            stats.errors,
            stats.total,
            100.0 * stats.errors as f64 / stats.total.max(1) as f64
        );
    }

    let json = EvalJson {
        model: tag,
        split: split.label(),
        n_total: report.total,
        n_error: report.errors,
        error_rate_percent: report.error_rate(),
        invalid_action_errors: report.invalid_action_errors,
        invalid_action_rate_percent: report.invalid_action_rate(),
        encode_failures: report.encode_failures,
        rank_histogram: report.rank_histogram.clone(),
        per_task: report
            .per_task
            .iter()
            .map(|(task, stats)| {
                (
                    task.clone(),
                    TaskJson {
                        total: stats.total,
                        errors: stats.errors,
                        error_rate_percent: 100.0 * stats.errors as f64
                            / stats.total.max(1) as f64,
                    },
                )
            })
            .collect(),
    };
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let path = cfg.out.join("eval.json");
    let mut text = serde_json::to_string_pretty(&json).context("cannot serialize report")?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    provenance::write(&cfg.out, "eval", cfg)?;
    println!("report written to {}", path.display());
    Ok(())
}
