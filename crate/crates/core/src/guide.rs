//! Network-guided rewriting and test-set evaluation.
//!
//! At each step the current term (and, when the model uses action history,
//! the steps taken so far) is encoded, the network ranks every joint
//! (rule, position) class, and the highest-ranked class that actually
//! applies to the term is executed. Ranked fallback keeps the loop moving
//! when the top prediction does not match anything; a rank cap bounds how
//! far down the list it will look.
//!
//! Rewriting guided this way has no termination guarantee, so traces are
//! always bounded by a step limit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{encode_inputs, EncodeError};
use crate::model::Model;
use crate::net::{forward_encoded, rank_classes, NetError};
use crate::rule::{apply_rule_at, one_way_match, ApplyError, FreshCounter, RuleSet};
use crate::scheme::{Scheme, Step};
use crate::term::{Position, Term};

/// One executed guided step: where the chosen action ranked in the
/// network's ordering, and what it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidedStep {
    pub source: Term,
    pub rule_index: usize,
    pub position: Position,
    /// 1-based rank of the executed class among the network's predictions.
    pub rank: usize,
    pub target: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOutcome {
    /// The rule set's goal predicate accepted the final term.
    Solved,
    /// The step limit was reached first.
    StepLimit,
    /// No ranked prediction applied (or the term stopped being encodable).
    Stuck,
}

impl std::fmt::Display for TraceOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TraceOutcome::Solved => "solved",
            TraceOutcome::StepLimit => "step-limit",
            TraceOutcome::Stuck => "stuck",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidedTrace {
    pub question: Term,
    pub steps: Vec<GuidedStep>,
    pub outcome: TraceOutcome,
}

impl GuidedTrace {
    pub fn answer(&self) -> &Term {
        self.steps.last().map_or(&self.question, |s| &s.target)
    }

    /// Reduces the trace to a plain scheme (dropping ranks), suitable for
    /// replay verification and the scheme file format.
    pub fn to_scheme(&self, rules: &RuleSet) -> Scheme {
        Scheme {
            question: self.question.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| Step {
                    source: s.source.clone(),
                    rule_name: rules.rule(s.rule_index).name().to_string(),
                    position: s.position.clone(),
                    target: s.target.clone(),
                })
                .collect(),
            answer: self.answer().clone(),
        }
    }
}

/// Bounds for guided rewriting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GuideLimits {
    pub max_steps: usize,
    /// How many ranked classes to try per step before giving up.
    /// `None` tries the full class list.
    pub rank_cap: Option<usize>,
}

impl Default for GuideLimits {
    fn default() -> Self {
        GuideLimits { max_steps: 50, rank_cap: Some(50) }
    }
}

#[derive(Debug, Error)]
pub enum GuideError {
    #[error("term cannot be encoded: {0}")]
    Encode(#[from] EncodeError),
    #[error("network rejected the encoded term: {0}")]
    Net(#[from] NetError),
    #[error("no applicable action among the top {tried} ranked classes")]
    NoApplicableAction { tried: usize },
    #[error("chosen action failed to apply: {0}")]
    Apply(#[from] ApplyError),
}

/// Picks the next action for `t`: the highest-ranked class whose decoded
/// (rule, position) pair actually applies. Returns the rule index, the
/// position, and the 1-based rank that was used.
pub fn guide_step(
    model: &Model,
    t: &Term,
    history: &[(usize, Position)],
    rs: &RuleSet,
    rank_cap: Option<usize>,
) -> Result<(usize, Position, usize), GuideError> {
    let codec = model.codec();
    let inputs = encode_inputs(t, history, model.options(), model.vocab(), &codec)?;
    let probs = forward_encoded(model.params(), &inputs)?;
    let ranked = rank_classes(&probs);
    let cap = rank_cap.unwrap_or(ranked.len()).min(ranked.len());
    for (i, &class) in ranked.iter().take(cap).enumerate() {
        let (rule_index, position) = codec.decode(class).expect("ranked classes are in range");
        let Ok(sub) = t.subterm_at(position) else { continue };
        if one_way_match(rs.rule(rule_index).lhs(), sub).is_some() {
            return Ok((rule_index, position.clone(), i + 1));
        }
    }
    Err(GuideError::NoApplicableAction { tried: cap })
}

/// Rewrites `question` step by step under the model's guidance until the
/// rule set's goal accepts the term, the step limit is reached, or no
/// ranked prediction applies.
///
/// The trace replays: every step is a successful rule application, with
/// fresh right-hand-side variables drawn from a counter that starts at
/// zero, exactly as scheme replay does.
pub fn human_like_rewrite(
    model: &Model,
    question: &Term,
    rs: &RuleSet,
    limits: &GuideLimits,
) -> GuidedTrace {
    assert!(limits.max_steps >= 1, "at least one step must be allowed");
    let mut steps = Vec::new();
    let mut history: Vec<(usize, Position)> = Vec::new();
    let mut fresh = FreshCounter::new();
    let mut term = question.clone();

    let outcome = loop {
        if rs.goal().is_solved(&term) {
            break TraceOutcome::Solved;
        }
        if steps.len() == limits.max_steps {
            break TraceOutcome::StepLimit;
        }
        let (rule_index, position, rank) =
            match guide_step(model, &term, &history, rs, limits.rank_cap) {
                Ok(choice) => choice,
                Err(_) => break TraceOutcome::Stuck,
            };
        let target = match apply_rule_at(&term, rs.rule(rule_index), &position, &mut fresh) {
            Ok(t) => t,
            Err(_) => break TraceOutcome::Stuck,
        };
        steps.push(GuidedStep {
            source: term.clone(),
            rule_index,
            position: position.clone(),
            rank,
            target: target.clone(),
        });
        history.push((rule_index, position));
        term = target;
    };
    GuidedTrace { question: question.clone(), steps, outcome }
}

/// Line record for exported traces: the scheme fields plus rank and
/// outcome.
#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    question: String,
    answer: String,
    outcome: String,
    steps: Vec<TraceStepRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceStepRecord {
    source: String,
    rule: String,
    position: Vec<usize>,
    rank: usize,
    target: String,
}

/// Writes traces as JSON lines mirroring the scheme format with `rank`
/// and `outcome` added.
pub fn write_traces(
    out: &mut impl Write,
    traces: &[GuidedTrace],
    rules: &RuleSet,
) -> std::io::Result<()> {
    for trace in traces {
        let record = TraceRecord {
            question: trace.question.to_string(),
            answer: trace.answer().to_string(),
            outcome: trace.outcome.to_string(),
            steps: trace
                .steps
                .iter()
                .map(|s| TraceStepRecord {
                    source: s.source.to_string(),
                    rule: rules.rule(s.rule_index).name().to_string(),
                    position: s.position.path().to_vec(),
                    rank: s.rank,
                    target: s.target.to_string(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// One supervised step for evaluation: the source term, the true preceding
/// history of its scheme, and the recorded action.
#[derive(Debug, Clone, PartialEq)]
pub struct StepExample {
    pub source: Term,
    /// Applications before this step in the same scheme, oldest first.
    pub history: Vec<(usize, Position)>,
    pub rule_index: usize,
    pub position: Position,
    /// Task family label for the per-task breakdown.
    pub task: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskStats {
    pub total: usize,
    pub errors: usize,
}

/// Error-rate report over a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    /// Strict scoring: top-1 class differs from the recorded action.
    pub errors: usize,
    /// Relaxed scoring: top-1 class is not even applicable to the source.
    pub invalid_action_errors: usize,
    /// Examples that could not be encoded; always counted as errors.
    pub encode_failures: usize,
    /// `rank_histogram[r - 1]` counts examples whose recorded action the
    /// network ranked at `r`. Encoding failures are not in the histogram.
    pub rank_histogram: Vec<usize>,
    pub per_task: BTreeMap<String, TaskStats>,
}

impl EvalReport {
    /// Strict top-1 error rate in percent.
    pub fn error_rate(&self) -> f64 {
        100.0 * self.errors as f64 / self.total as f64
    }

    /// Relaxed error rate in percent: predictions that are applicable to
    /// the source count as correct even when they differ from the record.
    pub fn invalid_action_rate(&self) -> f64 {
        100.0 * self.invalid_action_errors as f64 / self.total as f64
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("the test set is empty")]
    EmptyTestSet,
    #[error("step {index} names rule {rule} but the model only has {rules} rules")]
    UnknownRule { index: usize, rule: usize, rules: usize },
}

/// Scores the model on recorded steps.
///
/// The prediction for each step is the top-ranked class for its source
/// term, conditioned on the scheme's true preceding history when the model
/// uses action history. An error is a top-1 class that differs from the
/// recorded (rule, position) pair; sources that fail to encode are errors
/// as well and are tallied separately.
pub fn evaluate_error_rate(
    model: &Model,
    rs: &RuleSet,
    examples: &[StepExample],
) -> Result<EvalReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let codec = model.codec();
    let mut report = EvalReport {
        total: examples.len(),
        errors: 0,
        invalid_action_errors: 0,
        encode_failures: 0,
        rank_histogram: vec![0; codec.num_classes()],
        per_task: BTreeMap::new(),
    };
    for (index, example) in examples.iter().enumerate() {
        if example.rule_index >= codec.rule_count() {
            return Err(EvalError::UnknownRule {
                index,
                rule: example.rule_index,
                rules: codec.rule_count(),
            });
        }
        let task = report.per_task.entry(example.task.clone()).or_default();
        task.total += 1;
        let encoded = encode_inputs(
            &example.source,
            &example.history,
            model.options(),
            model.vocab(),
            &codec,
        )
        .and_then(|inputs| {
            let expected = codec.encode(example.rule_index, &example.position)?;
            Ok((inputs, expected))
        });
        let (inputs, expected) = match encoded {
            Ok(pair) => pair,
            Err(_) => {
                report.encode_failures += 1;
                report.errors += 1;
                report.invalid_action_errors += 1;
                task.errors += 1;
                continue;
            }
        };
        let probs = forward_encoded(model.params(), &inputs).expect("widths match by construction");
        let ranked = rank_classes(&probs);
        let rank = ranked.iter().position(|&c| c == expected).expect("class in range") + 1;
        report.rank_histogram[rank - 1] += 1;
        if ranked[0] != expected {
            report.errors += 1;
            task.errors += 1;
        }
        let (rule_index, position) = codec.decode(ranked[0]).expect("in range");
        let applicable = example
            .source
            .subterm_at(position)
            .is_ok_and(|sub| one_way_match(rs.rule(rule_index).lhs(), sub).is_some());
        if !applicable {
            report.invalid_action_errors += 1;
        }
    }
    Ok(report)
}

/// Expands a scheme into per-step supervision, pairing each step with the
/// history that precedes it.
pub fn scheme_step_examples(
    scheme: &Scheme,
    rs: &RuleSet,
    task: &str,
) -> Result<Vec<StepExample>, String> {
    let mut history: Vec<(usize, Position)> = Vec::new();
    let mut examples = Vec::with_capacity(scheme.steps.len());
    for step in &scheme.steps {
        let rule_index = rs
            .index_of(&step.rule_name)
            .ok_or_else(|| format!("rule {} is not in the rule set", step.rule_name))?;
        examples.push(StepExample {
            source: step.source.clone(),
            history: history.clone(),
            rule_index,
            position: step.position.clone(),
            task: task.to_string(),
        });
        history.push((rule_index, step.position.clone()));
    }
    Ok(examples)
}

/// Reads traces written by [`write_traces`]; used by tests and tooling
/// that post-process exported traces.
pub fn read_trace_outcomes(input: &mut impl BufRead) -> std::io::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        out.push((record.question, record.outcome));
    }
    Ok(out)
}
