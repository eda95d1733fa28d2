//! End-to-end checks of the `rwnet` binary: generate, train, evaluate,
//! and rewrite against real files, plus the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

use anyhow::Result;

const ALGEBRA_RULES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../rules/algebra.rules");
const PEANO_RULES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../rules/peano.rules");

fn rwnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_code(out: &Output, expected: i32) {
    assert_eq!(
        out.status.code(),
        Some(expected),
        "exit code mismatch\nstdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        stderr_of(out)
    );
}

fn gen_small(dir: &Path, seed: &str, count: &str) {
    let out = rwnet(&[
        "gen",
        "--rules",
        ALGEBRA_RULES,
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        seed,
        "--count",
        count,
    ]);
    assert_code(&out, 0);
}

#[test]
fn gen_train_eval_rewrite_round_trip() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let out_dir = dir.path().to_str().unwrap();
    gen_small(dir.path(), "11", "80");
    for file in ["schemes.jsonl", "manifest.json", "provenance-gen.json"] {
        assert!(dir.path().join(file).is_file(), "{file} missing after gen");
    }

    let train_out = rwnet(&[
        "train",
        "--rules",
        ALGEBRA_RULES,
        "--out",
        out_dir,
        "--hidden-layers",
        "1",
        "--hidden-units",
        "16",
        "--rpt-depth",
        "1",
        "--max-epochs",
        "3",
        "--seed",
        "11",
    ]);
    assert_code(&train_out, 0);
    let text = stdout_of(&train_out);
    assert!(text.contains("FNN1+RPT1"), "tag missing in: {text}");
    let model_path = dir.path().join("model-FNN1+RPT1.bin");
    assert!(model_path.is_file());
    assert!(dir.path().join("provenance-train.json").is_file());

    let curve = std::fs::read_to_string(dir.path().join("curve.tsv"))?;
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("epoch\tloss\tlr"));
    let mut last_epoch = 0usize;
    for line in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3, "bad curve row: {line}");
        let epoch: usize = fields[0].parse()?;
        assert!(epoch > last_epoch, "epochs must increase strictly");
        last_epoch = epoch;
        let loss: f64 = fields[1].parse()?;
        assert!(loss.is_finite());
        let lr: f64 = fields[2].parse()?;
        assert!(lr > 0.0);
    }
    assert!(last_epoch >= 1);

    let model_arg = model_path.to_str().unwrap();
    let eval_out = rwnet(&[
        "eval", "--rules", ALGEBRA_RULES, "--out", out_dir, "--model", model_arg,
    ]);
    assert_code(&eval_out, 0);
    let text = stdout_of(&eval_out);
    assert!(text.contains("N_Total:"), "missing N_Total in: {text}");
    assert!(text.contains("N_Error:"), "missing N_Error in: {text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json"))?)?;
    let rate = report["error_rate_percent"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&rate));
    assert_eq!(
        report["n_total"].as_u64().unwrap(),
        report["rank_histogram"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .sum::<u64>()
            + report["encode_failures"].as_u64().unwrap()
    );

    let rewrite_out = rwnet(&[
        "rewrite",
        "2*X=8",
        "--rules",
        ALGEBRA_RULES,
        "--out",
        out_dir,
        "--model",
        model_arg,
        "--max-steps",
        "3",
        "--rank-cap",
        "0",
        "--trace-out",
        dir.path().join("trace.jsonl").to_str().unwrap(),
    ]);
    assert_code(&rewrite_out, 0);
    let text = stdout_of(&rewrite_out);
    assert!(text.contains("outcome:"), "missing outcome in: {text}");
    assert!(text.contains("-->") || text.contains("outcome: solved"));
    assert!(dir.path().join("trace.jsonl").is_file());
    Ok(())
}

#[test]
fn same_seed_regenerates_identical_files() -> Result<()> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    gen_small(a.path(), "3", "50");
    gen_small(b.path(), "3", "50");
    for file in ["schemes.jsonl", "manifest.json"] {
        let bytes_a = std::fs::read(a.path().join(file))?;
        let bytes_b = std::fs::read(b.path().join(file))?;
        assert_eq!(bytes_a, bytes_b, "{file} differs between identical gen runs");
    }
    Ok(())
}

#[test]
fn missing_rule_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rwnet(&[
        "gen",
        "--rules",
        "/nonexistent/missing.rules",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    assert!(stderr_of(&out).contains("rule set not found"));
}

#[test]
fn unknown_config_key_is_a_usage_error() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "no_such_option = 5\n")?;
    let out = rwnet(&["gen", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(stderr_of(&out).contains("no_such_option"));
    Ok(())
}

#[test]
fn config_file_drives_gen_and_flags_override_it() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        format!(
            "rules = {ALGEBRA_RULES}\nout = {}\ncount = 40\nseed = 9\n",
            dir.path().display()
        ),
    )?;
    let out = rwnet(&["gen", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("provenance-gen.json"))?;
    let json: serde_json::Value = serde_json::from_str(&text)?;
    assert_eq!(json["seed"], 7, "flag must override the config file seed");
    assert_eq!(json["config"]["count"], "40");
    Ok(())
}

#[test]
fn wrong_rule_set_on_eval_is_a_usage_error() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let out_dir = dir.path().to_str().unwrap();
    gen_small(dir.path(), "2", "60");
    let train_out = rwnet(&[
        "train",
        "--rules",
        ALGEBRA_RULES,
        "--out",
        out_dir,
        "--hidden-layers",
        "1",
        "--hidden-units",
        "8",
        "--rpt-depth",
        "1",
        "--max-epochs",
        "1",
    ]);
    assert_code(&train_out, 0);
    let model = dir.path().join("model-FNN1+RPT1.bin");
    let out = rwnet(&[
        "eval", "--rules", PEANO_RULES, "--out", out_dir,
        "--model", model.to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    assert!(stderr_of(&out).contains("different rule set"));
    Ok(())
}

#[test]
fn unsolvable_generation_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rwnet(&[
        "gen",
        "--rules",
        PEANO_RULES,
        "--out",
        dir.path().to_str().unwrap(),
        "--count",
        "30",
    ]);
    assert_code(&out, 1);
    assert!(stderr_of(&out).contains("corpus generation failed"));
}

#[test]
fn unparseable_expression_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rwnet(&[
        "rewrite",
        "3*+=(",
        "--rules",
        ALGEBRA_RULES,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 2);
}

#[test]
fn missing_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rwnet(&[
        "rewrite",
        "2*X=8",
        "--rules",
        ALGEBRA_RULES,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    assert!(stderr_of(&out).contains("model not found"));
}
