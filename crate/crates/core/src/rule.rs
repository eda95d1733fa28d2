//! Rewrite rules, one-way matching, rule application, and rule sets.
//!
//! A rule `l => r` rewrites a subterm `t` to `r[θ]` when the one-way match
//! `l[θ] ≡ t` succeeds; the substitution is applied to the pattern only,
//! never to the subject term. Variables that occur only on the right-hand
//! side (such as the intermediate introduced by the chain rule) are
//! instantiated with reserved constants `u1, u2, ...` drawn from a counter
//! that is scoped to one derivation.
//!
//! Rule files are UTF-8 text with one rule per line:
//!
//! ```text
//! # comment
//! add_succ : x+S(y) => S(x+y)
//! ```
//!
//! The order of rules in the file is the canonical rule-index order used by
//! the action encoder and the network output layer, so it must not be
//! permuted once a model has been trained against it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::term::{ParseError, Position, PositionError, Symbol, Term};

/// A named rewrite rule `lhs => rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    name: String,
    lhs: Term,
    rhs: Term,
    /// Right-hand-side-only variables, in order of first occurrence in rhs.
    fresh_vars: Vec<Symbol>,
}

impl RewriteRule {
    pub fn new(name: impl Into<String>, lhs: Term, rhs: Term) -> Result<Self, RuleError> {
        let name = name.into();
        if lhs.args().is_empty() && lhs.head().is_variable() {
            return Err(RuleError::BareVariableLhs(name));
        }
        let bound = lhs.variables();
        let mut fresh_vars = Vec::new();
        rhs.for_each_symbol(&mut |sym, arity| {
            if arity == 0 && sym.is_variable() && !bound.contains(sym) && !fresh_vars.contains(sym) {
                fresh_vars.push(sym.clone());
            }
        });
        Ok(RewriteRule { name, lhs, rhs, fresh_vars })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &Term {
        &self.rhs
    }

    /// Variables instantiated with fresh constants on application.
    pub fn fresh_vars(&self) -> &[Symbol] {
        &self.fresh_vars
    }

    pub fn introduces_fresh(&self) -> bool {
        !self.fresh_vars.is_empty()
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} => {}", self.name, self.lhs, self.rhs)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule `{0}`: left-hand side must not be a bare variable")]
    BareVariableLhs(String),
}

/// A finite map from pattern variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Symbol, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, var: &Symbol) -> Option<&Term> {
        self.bindings.get(var)
    }

    /// Binds `var` to `value`; fails if `var` is already bound differently.
    pub fn bind(&mut self, var: Symbol, value: Term) -> bool {
        match self.bindings.get(&var) {
            Some(existing) => *existing == value,
            None => {
                self.bindings.insert(var, value);
                true
            }
        }
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

/// Matches `pattern` against `target`, instantiating pattern variables only.
///
/// On success the returned substitution satisfies
/// `apply_substitution(pattern, θ) == target`; variables in `target` are
/// treated as opaque constants (they never unify with anything but an
/// identical variable occurrence in the pattern position).
pub fn one_way_match(pattern: &Term, target: &Term) -> Option<Substitution> {
    let mut subst = Substitution::new();
    if match_into(pattern, target, &mut subst) {
        Some(subst)
    } else {
        None
    }
}

fn match_into(pattern: &Term, target: &Term, subst: &mut Substitution) -> bool {
    if pattern.args().is_empty() && pattern.head().is_variable() {
        return subst.bind(pattern.head().clone(), target.clone());
    }
    pattern.head() == target.head()
        && pattern.args().len() == target.args().len()
        && pattern
            .args()
            .iter()
            .zip(target.args())
            .all(|(p, t)| match_into(p, t, subst))
}

/// Replaces every bound variable in `t` simultaneously; other nodes unchanged.
pub fn apply_substitution(t: &Term, subst: &Substitution) -> Term {
    if t.args().is_empty() {
        if let Some(bound) = subst.get(t.head()) {
            return bound.clone();
        }
        return t.clone();
    }
    let args = t.args().iter().map(|a| apply_substitution(a, subst)).collect();
    Term::new(t.head().clone(), args).expect("arity preserved by substitution")
}

/// Allocator for the reserved constants `u1, u2, ...` within one derivation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FreshCounter {
    used: usize,
}

impl FreshCounter {
    pub fn new() -> Self {
        FreshCounter::default()
    }

    pub fn starting_after(used: usize) -> Self {
        FreshCounter { used }
    }

    /// Number of fresh constants handed out so far.
    pub fn used(&self) -> usize {
        self.used
    }

    pub fn next(&mut self) -> Symbol {
        self.used += 1;
        Symbol::fresh(self.used)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error(transparent)]
    Position(#[from] PositionError),
    #[error("rule `{0}` does not match at {1}")]
    NoMatch(String, Position),
}

/// Applies `rule` to the subterm of `t` at `p`.
///
/// Fresh right-hand-side variables are bound to the next constants from
/// `fresh` (in rhs first-occurrence order) before the right-hand side is
/// instantiated; the counter advances only when the match succeeds.
pub fn apply_rule_at(
    t: &Term,
    rule: &RewriteRule,
    p: &Position,
    fresh: &mut FreshCounter,
) -> Result<Term, ApplyError> {
    let subterm = t.subterm_at(p)?;
    let mut subst = one_way_match(rule.lhs(), subterm)
        .ok_or_else(|| ApplyError::NoMatch(rule.name().to_string(), p.clone()))?;
    for var in rule.fresh_vars() {
        let bound = subst.bind(var.clone(), Term::leaf(fresh.next()));
        debug_assert!(bound, "fresh variables cannot already be bound");
    }
    let replacement = apply_substitution(rule.rhs(), &subst);
    Ok(t.replace_at(p, replacement)?)
}

/// Solved-form predicate attached to a rule set.
///
/// `Auto` dispatches on the shape of the term: equations (head `=`) use the
/// solved-equation test, anything else must be free of `D` and `Integral`
/// applications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Auto,
    /// `Unknown = ground numeral expression`, unknown on the left.
    SolvedEquation,
    /// No subterm may be headed by one of these symbols.
    Eliminate(Vec<String>),
}

impl Goal {
    pub fn is_solved(&self, t: &Term) -> bool {
        match self {
            Goal::Auto => {
                if t.head().text() == "=" && t.args().len() == 2 {
                    Goal::SolvedEquation.is_solved(t)
                } else {
                    Goal::Eliminate(vec!["D".into(), "Integral".into()]).is_solved(t)
                }
            }
            Goal::SolvedEquation => {
                if t.head().text() != "=" || t.args().len() != 2 {
                    return false;
                }
                let unknown = &t.args()[0];
                unknown.args().is_empty()
                    && !unknown.head().is_variable()
                    && !unknown.head().is_numeral()
                    && !unknown.head().is_fresh_constant()
                    && all_leaves_numeral(&t.args()[1])
            }
            Goal::Eliminate(heads) => !heads.iter().any(|h| t.contains_head(h)),
        }
    }

    /// Parses the textual identifiers `auto`, `equation`, `eliminate:A,B`.
    pub fn parse(text: &str) -> Result<Goal, GoalParseError> {
        match text.trim() {
            "auto" => Ok(Goal::Auto),
            "equation" => Ok(Goal::SolvedEquation),
            other => match other.strip_prefix("eliminate:") {
                Some(heads) => {
                    let heads: Vec<String> = heads
                        .split(',')
                        .map(|h| h.trim().to_string())
                        .filter(|h| !h.is_empty())
                        .collect();
                    if heads.is_empty() {
                        Err(GoalParseError(other.to_string()))
                    } else {
                        Ok(Goal::Eliminate(heads))
                    }
                }
                None => Err(GoalParseError(other.to_string())),
            },
        }
    }
}

fn all_leaves_numeral(t: &Term) -> bool {
    if t.args().is_empty() {
        t.head().is_numeral()
    } else {
        t.args().iter().all(all_leaves_numeral)
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Auto => write!(f, "auto"),
            Goal::SolvedEquation => write!(f, "equation"),
            Goal::Eliminate(heads) => write!(f, "eliminate:{}", heads.join(",")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown goal `{0}` (expected `auto`, `equation`, or `eliminate:HEAD,...`)")]
pub struct GoalParseError(pub String);

/// An ordered rule collection plus the solved-form goal used by search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
    goal: Goal,
}

impl RuleSet {
    pub fn new(rules: Vec<RewriteRule>, goal: Goal) -> Result<Self, RuleSetError> {
        for (i, rule) in rules.iter().enumerate() {
            if rules[..i].iter().any(|r| r.name() == rule.name()) {
                return Err(RuleSetError::DuplicateName(rule.name().to_string()));
            }
        }
        Ok(RuleSet { rules, goal })
    }

    /// Parses the one-rule-per-line format (`NAME : LHS => RHS`, `#` comments).
    pub fn parse_str(text: &str, goal: Goal) -> Result<Self, RuleSetError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(hash) => &raw[..hash],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (name, body) = line.split_once(':').ok_or_else(|| RuleSetError::Format {
                line: line_no,
                message: "expected `NAME : LHS => RHS`".to_string(),
            })?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(RuleSetError::Format {
                    line: line_no,
                    message: format!("invalid rule name `{name}`"),
                });
            }
            let (lhs_text, rhs_text) = body.split_once("=>").ok_or_else(|| RuleSetError::Format {
                line: line_no,
                message: "missing `=>`".to_string(),
            })?;
            let lhs = Term::parse(lhs_text.trim())
                .map_err(|source| RuleSetError::Expression { line: line_no, source })?;
            let rhs = Term::parse(rhs_text.trim())
                .map_err(|source| RuleSetError::Expression { line: line_no, source })?;
            let rule = RewriteRule::new(name, lhs, rhs)
                .map_err(|source| RuleSetError::Rule { line: line_no, source })?;
            rules.push(rule);
        }
        RuleSet::new(rules, goal)
    }

    pub fn from_file(path: impl AsRef<Path>, goal: Goal) -> Result<Self, RuleSetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RuleSetError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        RuleSet::parse_str(&text, goal)
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn rule(&self, index: usize) -> &RewriteRule {
        &self.rules[index]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name() == name)
    }

    pub fn rule_names(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.name().to_string()).collect()
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    pub fn with_goal(&self, goal: Goal) -> Self {
        RuleSet { rules: self.rules.clone(), goal }
    }

    /// All `(rule index, position)` pairs where the rule matches, in
    /// lexicographic (rule index, pre-order position) order.
    pub fn applicable_actions(&self, t: &Term) -> Vec<(usize, Position)> {
        let positions = t.positions();
        let mut actions = Vec::new();
        for (rule_idx, rule) in self.rules.iter().enumerate() {
            for position in &positions {
                let subterm = t.subterm_at(position).expect("enumerated position");
                if one_way_match(rule.lhs(), subterm).is_some() {
                    actions.push((rule_idx, position.clone()));
                }
            }
        }
        actions
    }
}

#[derive(Debug, Error)]
pub enum RuleSetError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expression { line: usize, source: ParseError },
    #[error("line {line}: {source}")]
    Rule { line: usize, source: RuleError },
    #[error("duplicate rule name `{0}`")]
    DuplicateName(String),
    #[error("cannot read rule file `{path}`: {message}")]
    Io { path: String, message: String },
}
