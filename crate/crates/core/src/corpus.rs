//! Corpus generation: templated questions, breadth-first derivations, and
//! the shuffled step-level train/test split.
//!
//! Questions come from three task families: linear equations in one
//! unknown, derivatives in the quotient notation `D(f)/D(X)`, and
//! integrals `Integral(f, X)`. Every question is handed to the search
//! engine; questions it cannot solve are discarded and counted, as are
//! schemes whose terms grow too deep for the encoder's position block or
//! whose step positions fall outside the class table.
//!
//! The retained schemes are flattened to steps, shuffled with the corpus
//! seed, and split by index into train and test sets, so a step belongs to
//! exactly one side. Regeneration with the same specification is
//! bit-reproducible.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{build_example, ActionCodec, EncodeError, EncodedExample, EncoderOptions, Vocabulary};
use crate::guide::{scheme_step_examples, StepExample};
use crate::rule::RuleSet;
use crate::scheme::{read_schemes, replay, write_schemes, Scheme, SchemeIoError};
use crate::search::{bfs_search_goal, SearchLimits};
use crate::term::{Symbol, Term};

const SPLIT_SALT: u64 = 0x5e17_ba5e_0f_f5;
const QUESTION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Task family of a generated question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Linear,
    Differential,
    Integral,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Linear, TaskKind::Differential, TaskKind::Integral];

    pub fn label(&self) -> &'static str {
        match self {
            TaskKind::Linear => "linear",
            TaskKind::Differential => "differential",
            TaskKind::Integral => "integral",
        }
    }
}

/// Corpus generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub scheme_count: usize,
    pub seed: u64,
    /// Relative task family weights; normalized internally.
    pub linear_weight: f64,
    pub differential_weight: f64,
    pub integral_weight: f64,
    /// Inclusive numeral range for coefficients and constants.
    pub numeral_min: i64,
    pub numeral_max: i64,
    /// Template complexity range, 1 (atoms) to 3 (sums and compositions).
    pub depth_min: usize,
    pub depth_max: usize,
    /// Fraction of steps assigned to the training split.
    pub train_ratio: f64,
    /// How many reserved fresh constants (u1, u2, ...) the vocabulary keeps
    /// room for.
    pub fresh_reserve: usize,
    /// Rules barred from automatic search in addition to every rule that
    /// introduces fresh variables (those never terminate under search).
    pub exclude_rules: Vec<String>,
    pub search_limits: SearchLimits,
    /// Encoder position budget the corpus must fit: step positions use at
    /// most `p_max` branch indices and terms stay within depth `p_max + 1`.
    pub p_max: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            scheme_count: 400,
            seed: 0,
            linear_weight: 1.0,
            differential_weight: 1.0,
            integral_weight: 1.0,
            numeral_min: -9,
            numeral_max: 9,
            depth_min: 1,
            depth_max: 3,
            train_ratio: 5067.0 / 6067.0,
            fresh_reserve: 8,
            exclude_rules: Vec::new(),
            search_limits: SearchLimits::default(),
            p_max: 4,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |msg: String| Err(CorpusError::InvalidSpec(msg));
        if self.scheme_count == 0 {
            return fail("scheme count must be positive".into());
        }
        let weights = [self.linear_weight, self.differential_weight, self.integral_weight];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return fail("task weights must be non-negative".into());
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return fail("at least one task weight must be positive".into());
        }
        if self.numeral_min > self.numeral_max {
            return fail(format!(
                "numeral range {}..{} is empty",
                self.numeral_min, self.numeral_max
            ));
        }
        if self.numeral_max < 2 {
            return fail("the numeral range must reach at least 2 for coefficients".into());
        }
        if self.depth_min < 1 || self.depth_max > 3 || self.depth_min > self.depth_max {
            return fail("template depth range must lie within 1..=3".into());
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return fail("train ratio must be strictly between 0 and 1".into());
        }
        if self.p_max < 2 {
            return fail("position budget below 2 cannot fit any generated question".into());
        }
        Ok(())
    }

    /// Scheme counts per task family by largest remainder, so the split is
    /// exact and deterministic.
    fn task_counts(&self) -> [usize; 3] {
        let weights = [self.linear_weight, self.differential_weight, self.integral_weight];
        let sum: f64 = weights.iter().sum();
        let exact: Vec<f64> =
            weights.iter().map(|w| w / sum * self.scheme_count as f64).collect();
        let mut counts = [0usize; 3];
        for (c, e) in counts.iter_mut().zip(&exact) {
            *c = e.floor() as usize;
        }
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        let mut assigned: usize = counts.iter().sum();
        for &i in order.iter().cycle() {
            if assigned == self.scheme_count {
                break;
            }
            counts[i] += 1;
            assigned += 1;
        }
        counts
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid generator specification: {0}")]
    InvalidSpec(String),
    #[error("only {solved} of {requested} requested schemes were solvable; the rule set or templates are mismatched")]
    InsufficientYield { requested: usize, solved: usize },
    #[error("corpus has too few steps to split")]
    TooFewSteps,
    #[error("{0}")]
    Scheme(#[from] SchemeIoError),
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("corpus does not match the rule set: {0}")]
    Rule(String),
    #[error("step {index} cannot be encoded: {source}")]
    Encode {
        index: usize,
        #[source]
        source: EncodeError,
    },
}

/// Generation statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub requested: usize,
    /// Schemes retained in the corpus.
    pub solved: usize,
    pub discarded_unsolved: usize,
    pub discarded_too_deep: usize,
    pub discarded_step_depth: usize,
    pub total_steps: usize,
}

/// A generated corpus: the scheme archive plus the step-level split.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub schemes: Vec<Scheme>,
    /// Task label per scheme, parallel to `schemes`.
    pub tasks: Vec<String>,
    /// Global step indices (schemes flattened in order) per split, in
    /// shuffled order.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub train_ratio: f64,
    pub p_max: usize,
    pub report: GenReport,
}

/// Deterministic per-question generator stream.
fn question_rng(spec: &GeneratorSpec, task: TaskKind, index: usize) -> ChaCha8Rng {
    let task_salt = match task {
        TaskKind::Linear => 1,
        TaskKind::Differential => 2,
        TaskKind::Integral => 3,
    };
    ChaCha8Rng::seed_from_u64(
        spec.seed
            ^ (index as u64 + 1).wrapping_mul(QUESTION_SALT)
            ^ (task_salt << 56),
    )
}

fn num(n: i64) -> Term {
    Term::atom(n.to_string())
}

fn bin(op: &str, l: Term, r: Term) -> Term {
    Term::binary(op, l, r).expect("operator arity")
}

fn fun(name: &str, arg: Term) -> Term {
    Term::unary(name, arg).expect("functor arity")
}

fn draw_nonzero(rng: &mut ChaCha8Rng, min: i64, max: i64) -> i64 {
    loop {
        let n = rng.gen_range(min..=max);
        if n != 0 {
            return n;
        }
    }
}

/// Multiplicative coefficient with |c| >= 2, so products never collapse
/// into trivial 1*V or 0*V shapes.
fn draw_coeff(rng: &mut ChaCha8Rng, min: i64, max: i64) -> i64 {
    loop {
        let n = rng.gen_range(min..=max);
        if n.abs() >= 2 {
            return n;
        }
    }
}

fn unknown(rng: &mut ChaCha8Rng) -> Term {
    let name = ["X", "Y", "Z"][rng.gen_range(0..3)];
    Term::atom(name)
}

/// Generates the question for (task, index); a pure function of the
/// specification, task, and index.
pub fn gen_question(spec: &GeneratorSpec, task: TaskKind, index: usize) -> Term {
    let mut rng = question_rng(spec, task, index);
    let tier = rng.gen_range(spec.depth_min..=spec.depth_max);
    match task {
        TaskKind::Linear => linear_question(spec, &mut rng, tier),
        TaskKind::Differential => differential_question(spec, &mut rng, tier),
        TaskKind::Integral => integral_question(spec, &mut rng, tier),
    }
}

fn linear_question(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, tier: usize) -> Term {
    let (lo, hi) = (spec.numeral_min, spec.numeral_max);
    let v = unknown(rng);
    let a = num(draw_coeff(rng, lo, hi));
    let b = num(draw_nonzero(rng, lo, hi));
    let c = num(draw_nonzero(rng, lo, hi));
    match tier {
        1 => match rng.gen_range(0..4) {
            0 => bin("=", bin("*", a, v), c),
            1 => bin("=", bin("+", v, b), c),
            2 => bin("=", bin("-", v, b), c),
            _ => bin("=", bin("/", b, v), c),
        },
        2 => match rng.gen_range(0..5) {
            0 => bin("=", bin("+", bin("*", a, v), b), c),
            1 => bin("=", bin("+", b, bin("*", a, v)), c),
            2 => bin("=", bin("-", bin("*", a, v), b), c),
            3 => bin("=", bin("-", b, bin("*", a, v)), c),
            _ => bin("=", bin("+", bin("/", v, a), b), c),
        },
        _ => {
            let d = num(draw_nonzero(rng, lo, hi));
            if spec.p_max >= 5 && rng.gen_range(0..2) == 0 {
                // Four unwrapping moves fit the deeper budget.
                let e = num(draw_coeff(rng, lo, hi));
                match rng.gen_range(0..2) {
                    0 => bin("=", bin("/", bin("+", bin("*", bin("+", v, b), a), d), e), c),
                    _ => bin("=", bin("/", bin("-", bin("*", a, bin("+", v, b)), d), e), c),
                }
            } else {
                match rng.gen_range(0..3) {
                    0 => bin("=", bin("*", a, bin("+", v, b)), c),
                    1 => bin("=", bin("+", bin("*", a, bin("-", v, b)), d), c),
                    _ => bin("=", c, bin("+", bin("*", a, v), b)),
                }
            }
        }
    }
}

/// Monomial shapes that stay derivable and shallow inside D(...)/D(...).
fn shallow_monomial(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, v: &Term) -> Term {
    match rng.gen_range(0..7) {
        0 => bin("^", v.clone(), num(2)),
        1 => bin("^", v.clone(), num(3)),
        2 => bin("^", v.clone(), num(4)),
        3 => bin("*", num(draw_coeff(rng, spec.numeral_min, spec.numeral_max)), v.clone()),
        4 => fun("Sin", v.clone()),
        5 => fun("Cos", v.clone()),
        _ => fun("Ln", v.clone()),
    }
}

fn differential_question(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, tier: usize) -> Term {
    let (lo, hi) = (spec.numeral_min, spec.numeral_max);
    let v = unknown(rng);
    let f = match tier {
        1 => shallow_monomial(spec, rng, &v),
        2 => {
            let c = num(draw_coeff(rng, lo, hi));
            let g = match rng.gen_range(0..5) {
                0 => v.clone(),
                1 => bin("^", v.clone(), num(rng.gen_range(2..=4))),
                2 => fun("Sin", v.clone()),
                3 => fun("Cos", v.clone()),
                _ => fun("Ln", v.clone()),
            };
            bin("*", c, g)
        }
        _ => {
            let make = |kind: usize, rng: &mut ChaCha8Rng| match kind {
                0 => bin("^", v.clone(), num(2)),
                1 => bin("^", v.clone(), num(3)),
                2 => bin("^", v.clone(), num(4)),
                3 => bin("*", num(draw_coeff(rng, lo, hi)), v.clone()),
                4 => fun("Sin", v.clone()),
                5 => fun("Cos", v.clone()),
                _ => fun("Ln", v.clone()),
            };
            if spec.p_max >= 5 && rng.gen_range(0..2) == 0 {
                // Sum vines: the deeper budget fits three summands, or four
                // when the innermost pair is the bare variable.
                let draw = |rng: &mut ChaCha8Rng| {
                    let kind = rng.gen_range(0..7);
                    make(kind, rng)
                };
                if rng.gen_range(0..2) == 0 {
                    let (a, b, c) = (draw(rng), draw(rng), draw(rng));
                    bin("+", bin("+", a, b), c)
                } else {
                    let inner = bin("+", v.clone(), v.clone());
                    let (a, b) = (draw(rng), draw(rng));
                    bin("+", bin("+", inner, a), b)
                }
            } else if rng.gen_range(0..2) == 0 {
                // Composition: an outer table function around a shallow
                // inner expression that differentiates without residue.
                let outer = ["Sin", "Cos", "Ln"][rng.gen_range(0..3)];
                let inner = if rng.gen_range(0..2) == 0 {
                    bin("^", v.clone(), num(2))
                } else {
                    bin("*", num(draw_coeff(rng, lo, hi)), v.clone())
                };
                fun(outer, inner)
            } else {
                let first = rng.gen_range(0..7);
                let second = loop {
                    let s = rng.gen_range(0..7);
                    if s != first {
                        break s;
                    }
                };
                let left = make(first, rng);
                let right = make(second, rng);
                bin("+", left, right)
            }
        }
    };
    bin("/", fun("D", f), fun("D", v))
}

fn integral_question(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, tier: usize) -> Term {
    let (lo, hi) = (spec.numeral_min, spec.numeral_max);
    let v = unknown(rng);
    let atom = |rng: &mut ChaCha8Rng, v: &Term| match rng.gen_range(0..5) {
        0 => v.clone(),
        1 => bin("^", v.clone(), num(2)),
        2 => bin("^", v.clone(), num(3)),
        3 => fun("Sin", v.clone()),
        _ => fun("Cos", v.clone()),
    };
    let f = match tier {
        1 => atom(rng, &v),
        2 => bin("*", num(draw_coeff(rng, lo, hi)), atom(rng, &v)),
        _ => {
            let summand = |rng: &mut ChaCha8Rng, v: &Term| {
                let base = atom(rng, v);
                if rng.gen_range(0..2) == 0 {
                    bin("*", num(draw_coeff(rng, lo, hi)), base)
                } else {
                    base
                }
            };
            if spec.p_max >= 5 {
                // A deeper position budget admits longer chains: every
                // summand of a three-term sum may carry a coefficient, and
                // a four-term vine fits when its innermost pair is the bare
                // integration variable.
                match rng.gen_range(0..3) {
                    0 => {
                        let a = summand(rng, &v);
                        let b = summand(rng, &v);
                        let c = summand(rng, &v);
                        bin("+", bin("+", a, b), c)
                    }
                    1 => {
                        let inner = bin("+", v.clone(), v.clone());
                        let s3 = atom(rng, &v);
                        let s4 = summand(rng, &v);
                        bin("+", bin("+", inner, s3), s4)
                    }
                    _ => bin("+", summand(rng, &v), summand(rng, &v)),
                }
            } else if rng.gen_range(0..2) == 0 {
                let left = summand(rng, &v);
                let right = summand(rng, &v);
                bin("+", left, right)
            } else {
                // Three summands give the longest derivations the default
                // budget offers. The two under the inner sum stay bare so
                // the question fits the depth budget; only the outer right
                // summand may carry a coefficient.
                let a = atom(rng, &v);
                let b = atom(rng, &v);
                let c = summand(rng, &v);
                bin("+", bin("+", a, b), c)
            }
        }
    };
    bin("Integral", f, v)
}

/// Generates questions, derives schemes by search, filters them to the
/// encoder's position budget, and produces the shuffled step split.
pub fn gen_corpus(spec: &GeneratorSpec, rs: &RuleSet) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let mut excluded: Vec<String> = rs
        .rules()
        .iter()
        .filter(|r| r.introduces_fresh())
        .map(|r| r.name().to_string())
        .collect();
    excluded.extend(spec.exclude_rules.iter().cloned());

    let counts = spec.task_counts();
    let max_depth = spec.p_max + 1;
    let mut schemes = Vec::new();
    let mut tasks = Vec::new();
    let mut report = GenReport { requested: spec.scheme_count, ..GenReport::default() };

    let mut index = 0;
    for (task, &count) in TaskKind::ALL.iter().zip(&counts) {
        for _ in 0..count {
            let question = gen_question(spec, *task, index);
            index += 1;
            let scheme = match bfs_search_goal(
                &question,
                rs,
                &spec.search_limits,
                &excluded,
                &|t| rs.goal().is_solved(t),
            ) {
                Ok(s) => s,
                Err(_) => {
                    report.discarded_unsolved += 1;
                    continue;
                }
            };
            let too_deep = scheme.question.depth() > max_depth
                || scheme.steps.iter().any(|s| s.target.depth() > max_depth);
            if too_deep {
                report.discarded_too_deep += 1;
                continue;
            }
            if scheme.steps.iter().any(|s| s.position.len() > spec.p_max) {
                report.discarded_step_depth += 1;
                continue;
            }
            debug_assert!(replay(&scheme, rs).is_pass());
            report.total_steps += scheme.len();
            schemes.push(scheme);
            tasks.push(task.label().to_string());
        }
    }
    report.solved = schemes.len();
    if report.solved * 2 < spec.scheme_count {
        return Err(CorpusError::InsufficientYield {
            requested: spec.scheme_count,
            solved: report.solved,
        });
    }
    if report.total_steps < 2 {
        return Err(CorpusError::TooFewSteps);
    }

    let mut order: Vec<usize> = (0..report.total_steps).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed ^ SPLIT_SALT));
    let train_count =
        ((report.total_steps as f64 * spec.train_ratio).round() as usize).clamp(1, report.total_steps - 1);
    let test = order.split_off(train_count);

    Ok(Corpus {
        schemes,
        tasks,
        train: order,
        test,
        seed: spec.seed,
        train_ratio: spec.train_ratio,
        p_max: spec.p_max,
        report,
    })
}

/// Manifest file: everything about a corpus except the schemes themselves.
#[derive(Serialize, Deserialize)]
struct Manifest {
    seed: u64,
    p_max: usize,
    train_ratio: f64,
    report: GenReport,
    tasks: Vec<String>,
    train_steps: Vec<usize>,
    test_steps: Vec<usize>,
}

impl Corpus {
    pub fn total_steps(&self) -> usize {
        self.report.total_steps
    }

    /// Every step of every scheme in archive order, paired with its
    /// in-scheme history and task label.
    pub fn all_step_examples(&self, rs: &RuleSet) -> Result<Vec<StepExample>, CorpusError> {
        let mut out = Vec::with_capacity(self.total_steps());
        for (scheme, task) in self.schemes.iter().zip(&self.tasks) {
            out.extend(scheme_step_examples(scheme, rs, task).map_err(CorpusError::Rule)?);
        }
        Ok(out)
    }

    /// Materializes the train and test splits.
    pub fn split_examples(
        &self,
        rs: &RuleSet,
    ) -> Result<(Vec<StepExample>, Vec<StepExample>), CorpusError> {
        let all = self.all_step_examples(rs)?;
        let pick = |indices: &[usize]| -> Result<Vec<StepExample>, CorpusError> {
            indices
                .iter()
                .map(|&i| {
                    all.get(i).cloned().ok_or_else(|| {
                        CorpusError::Manifest(format!(
                            "step index {i} is outside the {} archived steps",
                            all.len()
                        ))
                    })
                })
                .collect()
        };
        Ok((pick(&self.train)?, pick(&self.test)?))
    }

    /// Vocabulary over every symbol in the archive, the rule set's concrete
    /// symbols, and the reserved fresh constants u1..uN.
    pub fn vocabulary(&self, rs: &RuleSet, fresh_reserve: usize) -> Vocabulary {
        let mut tokens = BTreeSet::new();
        let mut add_term = |t: &Term| {
            t.for_each_symbol(&mut |sym: &Symbol, arity: usize| {
                let _ = arity;
                tokens.insert(sym.text().to_string());
            });
        };
        for scheme in &self.schemes {
            add_term(&scheme.question);
            for step in &scheme.steps {
                add_term(&step.target);
            }
        }
        for rule in rs.rules() {
            for side in [rule.lhs(), rule.rhs()] {
                side.for_each_symbol(&mut |sym: &Symbol, arity: usize| {
                    if !(arity == 0 && sym.kind(0) == crate::term::SymbolKind::Variable) {
                        tokens.insert(sym.text().to_string());
                    }
                });
            }
        }
        for i in 1..=fresh_reserve {
            tokens.insert(Symbol::fresh(i).text().to_string());
        }
        Vocabulary::from_tokens(tokens)
    }

    /// Writes `schemes.jsonl` and `manifest.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
        let dir = dir.as_ref();
        let io_err = |action: &'static str, path: &Path| {
            let path = path.display().to_string();
            move |source: std::io::Error| CorpusError::Io { action, path, source }
        };
        fs::create_dir_all(dir).map_err(io_err("create", dir))?;

        let scheme_path = dir.join("schemes.jsonl");
        let file = fs::File::create(&scheme_path).map_err(io_err("create", &scheme_path))?;
        let mut out = BufWriter::new(file);
        write_schemes(&mut out, &self.schemes)?;
        out.flush().map_err(io_err("write", &scheme_path))?;

        let manifest = Manifest {
            seed: self.seed,
            p_max: self.p_max,
            train_ratio: self.train_ratio,
            report: self.report.clone(),
            tasks: self.tasks.clone(),
            train_steps: self.train.clone(),
            test_steps: self.test.clone(),
        };
        let manifest_path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CorpusError::Manifest(e.to_string()))?;
        text.push('\n');
        fs::write(&manifest_path, text).map_err(io_err("write", &manifest_path))
    }

    /// Loads a corpus saved by [`Corpus::save`].
    pub fn load(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
        let dir = dir.as_ref();
        let io_err = |action: &'static str, path: &Path| {
            let path = path.display().to_string();
            move |source: std::io::Error| CorpusError::Io { action, path, source }
        };
        let scheme_path = dir.join("schemes.jsonl");
        let file = fs::File::open(&scheme_path).map_err(io_err("open", &scheme_path))?;
        let schemes = read_schemes(&mut std::io::BufReader::new(file))?;

        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path).map_err(io_err("open", &manifest_path))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| CorpusError::Manifest(e.to_string()))?;
        if manifest.tasks.len() != schemes.len() {
            return Err(CorpusError::Manifest(format!(
                "{} task labels for {} schemes",
                manifest.tasks.len(),
                schemes.len()
            )));
        }
        let total: usize = schemes.iter().map(Scheme::len).sum();
        if manifest.train_steps.len() + manifest.test_steps.len() != total {
            return Err(CorpusError::Manifest(format!(
                "split covers {} steps but the archive holds {total}",
                manifest.train_steps.len() + manifest.test_steps.len()
            )));
        }
        Ok(Corpus {
            schemes,
            tasks: manifest.tasks,
            train: manifest.train_steps,
            test: manifest.test_steps,
            seed: manifest.seed,
            train_ratio: manifest.train_ratio,
            p_max: manifest.p_max,
            report: manifest.report,
        })
    }
}

/// Encodes supervised steps into network examples; any failure names the
/// offending step.
pub fn encode_examples(
    examples: &[StepExample],
    opts: &EncoderOptions,
    vocab: &Vocabulary,
    codec: &ActionCodec,
) -> Result<Vec<EncodedExample>, CorpusError> {
    examples
        .iter()
        .enumerate()
        .map(|(index, ex)| {
            build_example(
                &ex.source,
                &ex.history,
                ex.rule_index,
                &ex.position,
                opts,
                vocab,
                codec,
            )
            .map_err(|source| CorpusError::Encode { index, source })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Goal;

    fn algebra_rules() -> RuleSet {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../rules/algebra.rules");
        RuleSet::from_file(path, Goal::Auto).unwrap()
    }

    fn quick_spec(seed: u64, count: usize) -> GeneratorSpec {
        GeneratorSpec { scheme_count: count, seed, ..GeneratorSpec::default() }
    }

    #[test]
    fn rule_file_solves_one_question_from_each_family() {
        let rs = algebra_rules();
        let excluded: Vec<String> = rs
            .rules()
            .iter()
            .filter(|r| r.introduces_fresh())
            .map(|r| r.name().to_string())
            .collect();
        let solve = |text: &str| {
            bfs_search_goal(
                &Term::parse(text).unwrap(),
                &rs,
                &SearchLimits::default(),
                &excluded,
                &|t| rs.goal().is_solved(t),
            )
            .unwrap()
        };

        let linear = solve("3*X+4=19");
        assert_eq!(linear.len(), 2);
        assert_eq!(linear.answer.to_string(), "X=(19-4)/3");
        assert!(replay(&linear, &rs).is_pass());

        let diff = solve("D(Sin(X^2))/D(X)");
        assert_eq!(diff.len(), 2);
        assert_eq!(diff.answer.to_string(), "Cos(X^2)*(2*X)");
        assert!(replay(&diff, &rs).is_pass());

        let integral = solve("Integral(5*X^2+Sin(X),X)");
        assert_eq!(integral.len(), 4);
        assert_eq!(integral.answer.to_string(), "5*(X^3/3)+(0-Cos(X))");
        assert!(replay(&integral, &rs).is_pass());
    }

    #[test]
    fn questions_are_deterministic_per_index() {
        let spec = quick_spec(11, 30);
        for task in TaskKind::ALL {
            for index in 0..20 {
                assert_eq!(
                    gen_question(&spec, task, index),
                    gen_question(&spec, task, index)
                );
            }
            let distinct: BTreeSet<String> = (0..20)
                .map(|i| gen_question(&spec, task, i).to_string())
                .collect();
            assert!(distinct.len() > 1, "{task:?} questions are all identical");
        }
    }

    #[test]
    fn questions_have_their_family_shape() {
        let spec = quick_spec(5, 30);
        for index in 0..40 {
            let q = gen_question(&spec, TaskKind::Linear, index);
            assert_eq!(q.head().text(), "=");
            let unknowns = ["X", "Y", "Z"]
                .iter()
                .filter(|u| q.contains_head(u))
                .count();
            assert_eq!(unknowns, 1, "expected exactly one unknown in {q}");

            let q = gen_question(&spec, TaskKind::Differential, index);
            assert_eq!(q.head().text(), "/");
            assert_eq!(q.args()[0].head().text(), "D");
            assert_eq!(q.args()[1].head().text(), "D");

            let q = gen_question(&spec, TaskKind::Integral, index);
            assert_eq!(q.head().text(), "Integral");
        }
    }

    #[test]
    fn generated_corpus_replays_and_splits_cleanly() {
        let rs = algebra_rules();
        let spec = quick_spec(3, 60);
        let corpus = gen_corpus(&spec, &rs).unwrap();

        assert!(corpus.report.solved * 2 >= spec.scheme_count);
        assert_eq!(
            corpus.report.requested,
            corpus.report.solved
                + corpus.report.discarded_unsolved
                + corpus.report.discarded_too_deep
                + corpus.report.discarded_step_depth
        );
        for scheme in &corpus.schemes {
            assert!(replay(scheme, &rs).is_pass());
            assert!(scheme.question.depth() <= spec.p_max + 1);
            for step in &scheme.steps {
                assert!(step.position.len() <= spec.p_max);
            }
        }

        let total = corpus.total_steps();
        let mut seen: Vec<usize> = corpus.train.iter().chain(&corpus.test).copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..total).collect::<Vec<_>>(), "split must partition steps");
        let expected_train = (total as f64 * spec.train_ratio).round() as usize;
        assert_eq!(corpus.train.len(), expected_train);

        let (train, test) = corpus.split_examples(&rs).unwrap();
        assert_eq!(train.len() + test.len(), total);
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let rs = algebra_rules();
        let spec = quick_spec(9, 40);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        gen_corpus(&spec, &rs).unwrap().save(dir_a.path()).unwrap();
        gen_corpus(&spec, &rs).unwrap().save(dir_b.path()).unwrap();
        for name in ["schemes.jsonl", "manifest.json"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn save_and_load_round_trip() {
        let rs = algebra_rules();
        let corpus = gen_corpus(&quick_spec(21, 40), &rs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.save(dir.path()).unwrap();
        let loaded = Corpus::load(dir.path()).unwrap();
        assert_eq!(loaded, corpus);
    }

    #[test]
    fn wrong_rule_set_fails_the_yield_check() {
        let peano = RuleSet::parse_str(
            "add_zero : x + 0 => x\nadd_succ : x + S(y) => S(x + y)\n",
            Goal::Auto,
        )
        .unwrap();
        match gen_corpus(&quick_spec(1, 20), &peano) {
            Err(CorpusError::InsufficientYield { solved, .. }) => assert!(solved < 10),
            other => panic!("expected insufficient yield, got {other:?}"),
        }
    }

    #[test]
    fn vocabulary_covers_terms_rules_and_fresh_reserve() {
        let rs = algebra_rules();
        let corpus = gen_corpus(&quick_spec(2, 40), &rs).unwrap();
        let vocab = corpus.vocabulary(&rs, 8);
        for head in ["=", "+", "*", "D", "Integral", "Sin", "Cos"] {
            assert!(vocab.contains(head), "vocabulary lacks {head}");
        }
        for i in 1..=8 {
            assert!(vocab.contains(&format!("u{i}")));
        }
        // Rule pattern variables are placeholders, not vocabulary.
        for var in ["a", "b", "c", "f", "g", "x"] {
            assert!(!vocab.contains(var), "pattern variable {var} leaked into the vocabulary");
        }
    }

    #[test]
    fn train_steps_encode_under_default_options() {
        let rs = algebra_rules();
        let corpus = gen_corpus(&quick_spec(13, 50), &rs).unwrap();
        let vocab = corpus.vocabulary(&rs, 8);
        let opts = EncoderOptions::default();
        let codec = ActionCodec::new(rs.len(), opts.p_max, opts.breadth);
        let (train, test) = corpus.split_examples(&rs).unwrap();
        let encoded = encode_examples(&train, &opts, &vocab, &codec).unwrap();
        assert_eq!(encoded.len(), train.len());
        let encoded = encode_examples(&test, &opts, &vocab, &codec).unwrap();
        assert_eq!(encoded.len(), test.len());
    }

    #[test]
    fn task_counts_use_largest_remainder() {
        let spec = GeneratorSpec { scheme_count: 10, ..GeneratorSpec::default() };
        assert_eq!(spec.task_counts().iter().sum::<usize>(), 10);
        let spec = GeneratorSpec {
            scheme_count: 7,
            linear_weight: 0.5,
            differential_weight: 0.25,
            integral_weight: 0.25,
            ..GeneratorSpec::default()
        };
        // 3.5, 1.75, 1.75 -> floors 3,1,1; the two 0.75 remainders outrank
        // the 0.5 and each take one of the two leftover schemes.
        assert_eq!(spec.task_counts(), [3, 2, 2]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = GeneratorSpec::default();
        spec.scheme_count = 0;
        assert!(spec.validate().is_err());
        let mut spec = GeneratorSpec::default();
        spec.linear_weight = -1.0;
        assert!(spec.validate().is_err());
        let mut spec = GeneratorSpec::default();
        spec.numeral_max = 1;
        assert!(spec.validate().is_err());
        let mut spec = GeneratorSpec::default();
        spec.train_ratio = 1.0;
        assert!(spec.validate().is_err());
        let mut spec = GeneratorSpec::default();
        spec.depth_min = 0;
        assert!(spec.validate().is_err());
    }
}
