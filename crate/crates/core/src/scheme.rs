//! Recorded derivations and their line-record file format.
//!
//! A [`Scheme`] is a question, an ordered list of steps, and the answer the
//! steps reach. Every step names the rule applied and the position it was
//! applied at, so the whole derivation can be replayed and checked against
//! the recorded intermediate terms.
//!
//! Scheme files hold one JSON record per line with expressions in the
//! canonical text grammar and positions as integer arrays:
//!
//! ```text
//! {"question":"S(0)+S(S(0))","answer":"S(S(S(0)))","steps":[{"source":...}]}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rule::{apply_rule_at, FreshCounter, RuleSet};
use crate::term::{ParseError, Position, PositionError, Term};

/// One rewriting step: `rule_name` applied to `source` at `position`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub source: Term,
    pub rule_name: String,
    pub position: Position,
    pub target: Term,
}

/// A derivation from `question` to `answer`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub question: Term,
    pub steps: Vec<Step>,
    pub answer: Term,
}

impl Scheme {
    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Outcome of replaying a scheme against a rule set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    Pass,
    /// First step index at which replay diverged, with the reason.
    FailAt { index: usize, reason: String },
}

impl ReplayOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, ReplayOutcome::Pass)
    }
}

/// Re-applies every step and checks the chaining invariants.
///
/// Verifies, in order: the first source is the question, each step's source
/// equals the previous target, applying the named rule at the recorded
/// position reproduces the recorded target exactly (with fresh constants
/// allocated from a counter scoped to this scheme), and the last target is
/// the answer. A scheme with no steps passes iff question equals answer.
pub fn replay(scheme: &Scheme, rules: &RuleSet) -> ReplayOutcome {
    let fail = |index: usize, reason: String| ReplayOutcome::FailAt { index, reason };
    if scheme.steps.is_empty() {
        if scheme.question == scheme.answer {
            return ReplayOutcome::Pass;
        }
        return fail(0, "empty scheme with question != answer".to_string());
    }
    let mut fresh = FreshCounter::new();
    let mut current = scheme.question.clone();
    for (index, step) in scheme.steps.iter().enumerate() {
        if step.source != current {
            return fail(index, format!("source mismatch: expected {current}, recorded {}", step.source));
        }
        let rule_idx = match rules.index_of(&step.rule_name) {
            Some(i) => i,
            None => return fail(index, format!("unknown rule `{}`", step.rule_name)),
        };
        let target = match apply_rule_at(&current, rules.rule(rule_idx), &step.position, &mut fresh) {
            Ok(t) => t,
            Err(e) => return fail(index, e.to_string()),
        };
        if target != step.target {
            return fail(index, format!("target mismatch: computed {target}, recorded {}", step.target));
        }
        current = target;
    }
    if current != scheme.answer {
        return fail(
            scheme.steps.len() - 1,
            format!("answer mismatch: reached {current}, recorded {}", scheme.answer),
        );
    }
    ReplayOutcome::Pass
}

#[derive(Debug, Serialize, Deserialize)]
struct StepRecord {
    source: String,
    rule: String,
    position: Vec<usize>,
    target: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemeRecord {
    question: String,
    answer: String,
    steps: Vec<StepRecord>,
}

impl From<&Scheme> for SchemeRecord {
    fn from(s: &Scheme) -> Self {
        SchemeRecord {
            question: s.question.to_string(),
            answer: s.answer.to_string(),
            steps: s
                .steps
                .iter()
                .map(|step| StepRecord {
                    source: step.source.to_string(),
                    rule: step.rule_name.clone(),
                    position: step.position.path().to_vec(),
                    target: step.target.to_string(),
                })
                .collect(),
        }
    }
}

impl TryFrom<SchemeRecord> for Scheme {
    type Error = SchemeIoError;

    fn try_from(r: SchemeRecord) -> Result<Self, SchemeIoError> {
        let steps = r
            .steps
            .into_iter()
            .map(|s| {
                Ok(Step {
                    source: Term::parse(&s.source)?,
                    rule_name: s.rule,
                    position: Position::from_path(s.position)?,
                    target: Term::parse(&s.target)?,
                })
            })
            .collect::<Result<Vec<_>, SchemeIoError>>()?;
        Ok(Scheme {
            question: Term::parse(&r.question)?,
            steps,
            answer: Term::parse(&r.answer)?,
        })
    }
}

#[derive(Debug, Error)]
pub enum SchemeIoError {
    #[error("line {0}: {1}")]
    Record(usize, serde_json::Error),
    #[error(transparent)]
    Expression(#[from] ParseError),
    #[error(transparent)]
    Position(#[from] PositionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes one JSON record per scheme. Output is byte-deterministic for a
/// given input (no timestamps, stable field order).
pub fn write_schemes(out: &mut impl Write, schemes: &[Scheme]) -> Result<(), SchemeIoError> {
    for scheme in schemes {
        let record = SchemeRecord::from(scheme);
        serde_json::to_writer(&mut *out, &record).map_err(|e| SchemeIoError::Record(0, e))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_schemes(input: &mut impl BufRead) -> Result<Vec<Scheme>, SchemeIoError> {
    let mut schemes = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SchemeRecord =
            serde_json::from_str(&line).map_err(|e| SchemeIoError::Record(i + 1, e))?;
        schemes.push(Scheme::try_from(record)?);
    }
    Ok(schemes)
}
