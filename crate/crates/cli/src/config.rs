//! Experiment configuration: defaults, flat key=value config files, and
//! command-line overrides, resolved in that order.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rwnet_core::corpus::GeneratorSpec;
use rwnet_core::encoding::{EncodeMode, EncoderOptions};
use rwnet_core::net::TrainConfig;
use rwnet_core::rule::Goal;
use rwnet_core::search::SearchLimits;

/// Environment variable giving the default output directory.
pub const OUT_DIR_VAR: &str = "RWNET_OUT";

/// Everything a run needs: file paths, generator knobs, encoder options,
/// network configuration, and rewriting limits. One struct covers all
/// subcommands; each reads the fields it cares about.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rules: PathBuf,
    pub goal: String,
    pub out: PathBuf,
    /// Corpus directory for train/eval; defaults to `out`.
    pub data: Option<PathBuf>,
    /// Model path; defaults to `<out>/model-<tag>.bin`.
    pub model: Option<PathBuf>,
    pub seed: u64,

    // Generator.
    pub count: usize,
    pub train_ratio: f64,
    pub numeral_min: i64,
    pub numeral_max: i64,
    pub depth_min: usize,
    pub depth_max: usize,
    pub fresh_reserve: usize,
    pub exclude_rules: Vec<String>,

    // Encoder.
    pub mode: EncodeMode,
    pub rpt_depth: usize,
    pub breadth: usize,
    pub p_max: usize,
    pub sav: bool,
    /// Action-history length; 0 disables the history block.
    pub rar: usize,

    // Network.
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub init_lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,

    // Guided rewriting.
    pub max_steps: usize,
    /// Ranked classes tried per guided step; 0 means unbounded.
    pub rank_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let out = env::var_os(OUT_DIR_VAR)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        ExperimentConfig {
            rules: PathBuf::from("rules/algebra.rules"),
            goal: "auto".into(),
            out,
            data: None,
            model: None,
            seed: 0,
            count: 400,
            train_ratio: 5067.0 / 6067.0,
            numeral_min: -9,
            numeral_max: 9,
            depth_min: 1,
            depth_max: 3,
            fresh_reserve: 8,
            exclude_rules: Vec::new(),
            mode: EncodeMode::Rpt,
            rpt_depth: 3,
            breadth: 2,
            p_max: 4,
            sav: false,
            rar: 0,
            hidden_layers: 5,
            hidden_units: 1024,
            init_lr: 0.01,
            batch_size: 32,
            max_epochs: 200,
            max_steps: 50,
            rank_cap: 50,
        }
    }
}

impl ExperimentConfig {
    /// Defaults, then the config file when one is given.
    pub fn load(config_path: Option<&Path>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = config_path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!("{}:{}: expected key=value, got `{line}`", path.display(), lineno + 1)
                })?;
                cfg.set(key.trim(), value.trim()).with_context(|| {
                    format!("{}:{}", path.display(), lineno + 1)
                })?;
            }
        }
        Ok(cfg)
    }

    /// Sets one configuration key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| anyhow!("bad value for {key}: {e}"))
        }
        match key {
            "rules" => self.rules = PathBuf::from(value),
            "goal" => self.goal = value.to_string(),
            "out" => self.out = PathBuf::from(value),
            "data" => self.data = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            "seed" => self.seed = parse(key, value)?,
            "count" => self.count = parse(key, value)?,
            "train_ratio" => self.train_ratio = parse(key, value)?,
            "numeral_min" => self.numeral_min = parse(key, value)?,
            "numeral_max" => self.numeral_max = parse(key, value)?,
            "depth_min" => self.depth_min = parse(key, value)?,
            "depth_max" => self.depth_max = parse(key, value)?,
            "fresh_reserve" => self.fresh_reserve = parse(key, value)?,
            "exclude_rules" => {
                self.exclude_rules = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
            }
            "mode" => self.mode = value.parse().map_err(|e| anyhow!("bad value for mode: {e}"))?,
            "rpt_depth" => self.rpt_depth = parse(key, value)?,
            "breadth" => self.breadth = parse(key, value)?,
            "p_max" => self.p_max = parse(key, value)?,
            "sav" => self.sav = parse(key, value)?,
            "rar" => self.rar = parse(key, value)?,
            "hidden_layers" => self.hidden_layers = parse(key, value)?,
            "hidden_units" => self.hidden_units = parse(key, value)?,
            "init_lr" => self.init_lr = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "rank_cap" => self.rank_cap = parse(key, value)?,
            other => bail!("unknown configuration key `{other}`"),
        }
        Ok(())
    }

    /// The fully resolved configuration as sorted text pairs; this is what
    /// gets hashed and recorded for provenance.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("rules", self.rules.display().to_string());
        put("goal", self.goal.clone());
        put("out", self.out.display().to_string());
        put("data", self.data_dir().display().to_string());
        if let Some(model) = &self.model {
            put("model", model.display().to_string());
        }
        put("seed", self.seed.to_string());
        put("count", self.count.to_string());
        put("train_ratio", self.train_ratio.to_string());
        put("numeral_min", self.numeral_min.to_string());
        put("numeral_max", self.numeral_max.to_string());
        put("depth_min", self.depth_min.to_string());
        put("depth_max", self.depth_max.to_string());
        put("fresh_reserve", self.fresh_reserve.to_string());
        put("exclude_rules", self.exclude_rules.join(","));
        put("mode", self.mode.to_string());
        put("rpt_depth", self.rpt_depth.to_string());
        put("breadth", self.breadth.to_string());
        put("p_max", self.p_max.to_string());
        put("sav", self.sav.to_string());
        put("rar", self.rar.to_string());
        put("hidden_layers", self.hidden_layers.to_string());
        put("hidden_units", self.hidden_units.to_string());
        put("init_lr", self.init_lr.to_string());
        put("batch_size", self.batch_size.to_string());
        put("max_epochs", self.max_epochs.to_string());
        put("max_steps", self.max_steps.to_string());
        put("rank_cap", self.rank_cap.to_string());
        m
    }

    pub fn goal(&self) -> Result<Goal> {
        Goal::parse(&self.goal).map_err(|e| anyhow!("{e}"))
    }

    pub fn encoder_options(&self) -> EncoderOptions {
        EncoderOptions {
            mode: self.mode,
            depth: self.rpt_depth,
            breadth: self.breadth,
            p_max: self.p_max,
            sav: self.sav,
            rar: if self.rar == 0 { None } else { Some(self.rar) },
        }
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            scheme_count: self.count,
            seed: self.seed,
            numeral_min: self.numeral_min,
            numeral_max: self.numeral_max,
            depth_min: self.depth_min,
            depth_max: self.depth_max,
            train_ratio: self.train_ratio,
            fresh_reserve: self.fresh_reserve,
            exclude_rules: self.exclude_rules.clone(),
            search_limits: SearchLimits::default(),
            p_max: self.p_max,
            ..GeneratorSpec::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden_layers: self.hidden_layers,
            hidden_units: self.hidden_units,
            init_lr: self.init_lr,
            batch_size: self.batch_size,
            seed: self.seed,
            max_epochs: self.max_epochs,
            ..TrainConfig::default()
        }
    }

    /// Model naming tag, e.g. `FNN5+RPT3` or `FNN3+CRPT2+SAV+RAR2`.
    pub fn tag(&self) -> String {
        format!("FNN{}+{}", self.hidden_layers, self.encoder_options().code_tag())
    }

    pub fn data_dir(&self) -> &Path {
        self.data.as_deref().unwrap_or(&self.out)
    }

    pub fn model_path(&self) -> PathBuf {
        match &self.model {
            Some(p) => p.clone(),
            None => self.out.join(format!("model-{}.bin", self.tag())),
        }
    }

    /// Whole-configuration validation, run before any command touches the
    /// filesystem.
    pub fn validate(&self) -> Result<()> {
        self.goal()?;
        self.encoder_options().validate().map_err(|e| anyhow!("{e}"))?;
        self.generator_spec().validate().map_err(|e| anyhow!("{e}"))?;
        self.train_config().validate().map_err(|e| anyhow!("{e}"))?;
        if self.max_steps == 0 {
            bail!("max_steps must be at least 1");
        }
        Ok(())
    }
}
