//! `rwnet train`: encode the training split, run the trainer, and write
//! the model plus its learning curve.

use std::fs;
use std::io::Write as _;

use anyhow::{anyhow, Context};
use rwnet_core::corpus::{encode_examples, CorpusError};
use rwnet_core::encoding::ActionCodec;
use rwnet_core::model::Model;
use rwnet_core::net::{train, TrainError};

use crate::config::ExperimentConfig;
use crate::{provenance, CliError, CliResult};

pub fn run(cfg: &ExperimentConfig) -> CliResult<()> {
    let rs = super::load_rules(cfg)?;
    let corpus = super::load_corpus(cfg)?;
    if corpus.p_max != cfg.p_max {
        return Err(CliError::usage(anyhow!(
            "corpus was generated with a position budget of {} but the configuration says {}",
            corpus.p_max,
            cfg.p_max
        )));
    }

    let opts = cfg.encoder_options();
    let vocab = corpus.vocabulary(&rs, cfg.fresh_reserve);
    let codec = ActionCodec::new(rs.len(), opts.p_max, opts.breadth);
    let (train_steps, test_steps) = corpus
        .split_examples(&rs)
        .map_err(|e| CliError::usage(anyhow!("{e}")))?;
    let encoded = encode_examples(&train_steps, &opts, &vocab, &codec).map_err(|e| match e {
        // Steps the encoder cannot express mean the corpus and the encoder
        // options disagree; that is a configuration problem.
        CorpusError::Encode { .. } => CliError::usage(anyhow!("{e}")),
        other => CliError::Runtime(anyhow!("{other}")),
    })?;

    let tag = cfg.tag();
    println!(
        "training {tag}: {} examples ({} held out), input width {}, {} classes",
        encoded.len(),
        test_steps.len(),
        encoded.first().map(|e| e.inputs.width).unwrap_or(0),
        codec.num_classes()
    );

    let (params, curve) = train(&encoded, codec.num_classes(), &cfg.train_config()).map_err(
        |e| match e {
            TrainError::InvalidConfig(_) => CliError::usage(anyhow!("{e}")),
            other => CliError::Runtime(anyhow!("{other}")),
        },
    )?;
    for epoch in &curve.epochs {
        println!(
            "  epoch {:>3}  loss {:.6}  lr {}",
            epoch.epoch, epoch.loss, epoch.lr
        );
    }

    let model = Model::new(opts, vocab, rs.rule_names(), params)
        .map_err(|e| CliError::Runtime(anyhow!("{e}")))?;
    let model_path = cfg.model_path();
    if let Some(parent) = model_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    model
        .save(&model_path)
        .with_context(|| format!("cannot write model to {}", model_path.display()))?;

    let curve_path = cfg.out.join("curve.tsv");
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let mut tsv = String::from("epoch\tloss\tlr\n");
    for epoch in &curve.epochs {
        tsv.push_str(&format!("{}\t{}\t{}\n", epoch.epoch, epoch.loss, epoch.lr));
    }
    fs::File::create(&curve_path)
        .and_then(|mut f| f.write_all(tsv.as_bytes()))
        .with_context(|| format!("cannot write {}", curve_path.display()))?;
    provenance::write(&cfg.out, "train", cfg)?;

    println!(
        "model {tag} saved to {} after {} epochs (final loss {:.6})",
        model_path.display(),
        curve.epochs.len(),
        curve.final_loss().unwrap_or(f64::NAN)
    );
    println!("learning curve written to {}", curve_path.display());
    Ok(())
}
