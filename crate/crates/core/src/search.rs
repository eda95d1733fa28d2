//! Breadth-first search for a minimal derivation.
//!
//! States are terms; edges are rule applications. The frontier is expanded
//! in first-in-first-out order and each state's successors are generated in
//! (rule index, pre-order position) order, so the first derivation found has
//! minimal step count and ties break deterministically. States are
//! deduplicated by structural equality, and each state remembers how many
//! fresh constants its derivation has consumed so that later applications of
//! fresh-introducing rules continue the `u1, u2, ...` sequence.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::rule::{apply_rule_at, one_way_match, FreshCounter, RuleSet};
use crate::scheme::{Scheme, Step};
use crate::term::{Position, Term};

/// Resource bounds for one search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Maximum derivation length.
    pub max_depth: usize,
    /// Maximum number of distinct states stored.
    pub max_nodes: usize,
    /// Successor terms larger than this many nodes are not explored.
    pub max_term_size: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_depth: 25, max_nodes: 200_000, max_term_size: 60 }
    }
}

/// Why a search returned no scheme. Either way, outside guidance is needed.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SearchFailure {
    #[error("no derivation within depth limit")]
    DepthExhausted,
    #[error("node budget exhausted before a derivation was found")]
    NodeBudgetExhausted,
}

struct Node {
    term: Term,
    fresh_used: usize,
    depth: usize,
    /// Producing edge: (parent node index, rule index, position).
    edge: Option<(usize, usize, Position)>,
}

/// Searches for a minimal derivation from `question` to the rule set's goal.
pub fn bfs_search(question: &Term, rs: &RuleSet, limits: &SearchLimits) -> Result<Scheme, SearchFailure> {
    bfs_search_goal(question, rs, limits, &[], &|t| rs.goal().is_solved(t))
}

/// Generalised search: `exclude_rules` are skipped during expansion (their
/// indices keep their canonical values), and `solved` replaces the rule-set
/// goal. Used by the corpus generator (which bans rules that cannot lie on a
/// minimal path) and by interactive subgoal search (which targets one term).
pub fn bfs_search_goal(
    question: &Term,
    rs: &RuleSet,
    limits: &SearchLimits,
    exclude_rules: &[String],
    solved: &dyn Fn(&Term) -> bool,
) -> Result<Scheme, SearchFailure> {
    if solved(question) {
        return Ok(Scheme { question: question.clone(), steps: vec![], answer: question.clone() });
    }
    let excluded: Vec<bool> = rs
        .rules()
        .iter()
        .map(|r| exclude_rules.iter().any(|e| e == r.name()))
        .collect();

    let mut nodes = vec![Node {
        term: question.clone(),
        fresh_used: 0,
        depth: 0,
        edge: None,
    }];
    let mut seen: HashSet<Term> = HashSet::new();
    seen.insert(question.clone());
    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);

    while let Some(node_idx) = queue.pop_front() {
        if nodes[node_idx].depth == limits.max_depth {
            continue;
        }
        let term = nodes[node_idx].term.clone();
        let fresh_used = nodes[node_idx].fresh_used;
        let depth = nodes[node_idx].depth;
        let positions = term.positions();
        for (rule_idx, rule) in rs.rules().iter().enumerate() {
            if excluded[rule_idx] {
                continue;
            }
            for position in &positions {
                let subterm = term.subterm_at(position).expect("enumerated position");
                if one_way_match(rule.lhs(), subterm).is_none() {
                    continue;
                }
                let mut fresh = FreshCounter::starting_after(fresh_used);
                let successor = apply_rule_at(&term, rule, position, &mut fresh)
                    .expect("match succeeded above");
                if successor.size() > limits.max_term_size || seen.contains(&successor) {
                    continue;
                }
                if solved(&successor) {
                    return Ok(extract_scheme(&nodes, node_idx, rule_idx, position, successor, rs));
                }
                if nodes.len() == limits.max_nodes {
                    return Err(SearchFailure::NodeBudgetExhausted);
                }
                seen.insert(successor.clone());
                nodes.push(Node {
                    term: successor,
                    fresh_used: fresh.used(),
                    depth: depth + 1,
                    edge: Some((node_idx, rule_idx, position.clone())),
                });
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    Err(SearchFailure::DepthExhausted)
}

fn extract_scheme(
    nodes: &[Node],
    final_parent: usize,
    final_rule: usize,
    final_position: &Position,
    answer: Term,
    rs: &RuleSet,
) -> Scheme {
    // Collect edges root -> answer, then materialise steps in order.
    let mut edges: Vec<(usize, Position, Term)> = vec![(final_rule, final_position.clone(), answer.clone())];
    let mut cursor = final_parent;
    while let Some((parent, rule_idx, position)) = nodes[cursor].edge.clone() {
        edges.push((rule_idx, position, nodes[cursor].term.clone()));
        cursor = parent;
    }
    edges.reverse();

    let question = nodes[cursor].term.clone();
    let mut steps = Vec::with_capacity(edges.len());
    let mut source = question.clone();
    for (rule_idx, position, target) in edges {
        steps.push(Step {
            source: source.clone(),
            rule_name: rs.rule(rule_idx).name().to_string(),
            position,
            target: target.clone(),
        });
        source = target;
    }
    Scheme { question, steps, answer }
}
