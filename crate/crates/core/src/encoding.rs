//! Fixed-width vector codes for terms and rewriting context.
//!
//! Every node of a term produces one input vector, assembled from:
//!
//! * a position block: the node's path below the root, one one-hot of width
//!   `k` per level up to `P_max` (absent levels are zero),
//! * symbol blocks: the node's partial tree, flattened by generalized
//!   in-order traversal into `L` slots, each slot a one-hot over the
//!   vocabulary (`Empty` slots are zero blocks),
//! * an optional symbol-agreement block: the `L×L` binary matrix marking
//!   pairs of distinct slots holding the same symbol, flattened row-major,
//! * an optional action-history block: the last `N` (rule, position)
//!   applications as joint-class one-hots, most recent first, zero blocks
//!   where history is missing.
//!
//! Partial trees come in two shapes. The plain reduced partial tree (RPT)
//! expands the subtree below each node to depth `d` and breadth `k`. The
//! centered variant (C-RPT) gives every node an extra branch to its parent
//! and expands in all directions to path length `d`, suppressing the edge it
//! arrived on, so context above the center is recorded too.
//!
//! Prediction targets are joint classes: `class = rule_index × NP +
//! position_index`, where the position table holds all `k`-ary positions up
//! to path length `P_max` in breadth-first order (`NP = 15` for `k = 2`,
//! `P_max = 4`).
//!
//! Every feature is 0 or 1, so encoded examples store the indices of their
//! one entries; [`EncodedInputs::dense`] materialises plain vectors.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Position, Symbol, Term, MAX_ARITY};

/// Ordered one-hot slot assignment for symbol tokens.
///
/// `Empty` has no slot: it is encoded as an all-zero block. The token order
/// is part of a trained model and is serialized with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from arbitrary tokens: sorted, deduplicated.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut tokens: Vec<String> = tokens.into_iter().collect();
        tokens.sort();
        tokens.dedup();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn slot(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.tokens
    }
}

/// Partial tree shape: subtree-only, or centered with a parent branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodeMode {
    Rpt,
    Crpt,
}

impl fmt::Display for EncodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeMode::Rpt => write!(f, "rpt"),
            EncodeMode::Crpt => write!(f, "crpt"),
        }
    }
}

impl std::str::FromStr for EncodeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rpt" => Ok(EncodeMode::Rpt),
            "crpt" => Ok(EncodeMode::Crpt),
            other => Err(format!("unknown encoding mode `{other}` (expected `rpt` or `crpt`)")),
        }
    }
}

/// Encoder configuration; fixed per trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderOptions {
    pub mode: EncodeMode,
    /// Partial tree expansion depth `d` (levels below/around the center).
    pub depth: usize,
    /// Tree breadth `k`; all corpus operators are unary or binary.
    pub breadth: usize,
    /// Position block levels and position table depth cap.
    pub p_max: usize,
    /// Append the symbol-agreement matrix to every vector.
    pub sav: bool,
    /// Append the last-N action history to every vector.
    pub rar: Option<usize>,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        EncoderOptions {
            mode: EncodeMode::Rpt,
            depth: 2,
            breadth: MAX_ARITY,
            p_max: 4,
            sav: false,
            rar: None,
        }
    }
}

impl EncoderOptions {
    pub fn validate(&self) -> Result<(), EncodeError> {
        let fail = |msg: &str| Err(EncodeError::InvalidOptions(msg.to_string()));
        if self.depth < 1 {
            return fail("depth must be at least 1");
        }
        if self.breadth < 1 || self.breadth > MAX_ARITY {
            return fail("breadth must be between 1 and the maximum arity");
        }
        if self.p_max < 1 {
            return fail("p_max must be at least 1");
        }
        if self.rar == Some(0) {
            return fail("history window must be at least 1");
        }
        Ok(())
    }

    /// Slot count `L` of one partial tree code.
    pub fn slots_len(&self) -> usize {
        let b = match self.mode {
            EncodeMode::Rpt => self.breadth,
            EncodeMode::Crpt => self.breadth + 1,
        };
        perfect_tree_size(b, self.depth)
    }

    /// Short human-readable tag, e.g. `RPT3+SAV+RAR2` or `C-RPT2`.
    pub fn code_tag(&self) -> String {
        let mut tag = match self.mode {
            EncodeMode::Rpt => format!("RPT{}", self.depth),
            EncodeMode::Crpt => format!("C-RPT{}", self.depth),
        };
        if self.sav {
            tag.push_str("+SAV");
        }
        if let Some(n) = self.rar {
            tag.push_str(&format!("+RAR{n}"));
        }
        tag
    }
}

/// Nodes of a perfect `b`-ary tree with `depth + 1` levels.
fn perfect_tree_size(b: usize, depth: usize) -> usize {
    if b == 1 {
        depth + 1
    } else {
        (b.pow(depth as u32 + 1) - 1) / (b - 1)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("symbol `{0}` is not in the vocabulary")]
    UnknownSymbol(String),
    #[error("position {position} has {} path elements; at most {max_len} fit the position block", position.len())]
    PositionTooDeep { position: Position, max_len: usize },
    #[error("position {0} is outside the action position table")]
    PositionOutsideTable(Position),
    #[error("rule index {0} is outside the rule count {1}")]
    RuleOutOfRange(usize, usize),
    #[error("class {0} is outside the class count {1}")]
    ClassOutOfRange(usize, usize),
    #[error("invalid encoder options: {0}")]
    InvalidOptions(String),
}

/// One node's partial tree: the center position and `L` in-order slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTreeCode {
    pub center: Position,
    /// `None` is the Empty padding symbol.
    pub slots: Vec<Option<Symbol>>,
}

fn check_vocabulary(t: &Term, v: &Vocabulary) -> Result<(), EncodeError> {
    let mut missing: Option<String> = None;
    t.for_each_symbol(&mut |sym, _| {
        if missing.is_none() && !v.contains(sym.text()) {
            missing = Some(sym.text().to_string());
        }
    });
    match missing {
        Some(token) => Err(EncodeError::UnknownSymbol(token)),
        None => Ok(()),
    }
}

/// One reduced partial tree per node: the depth-`d` breadth-`k` perfect
/// expansion of the subtree below that node, Empty-padded, flattened by
/// generalized in-order (child 1 subtree, node, child 2 subtree, ...).
pub fn rpt_encode(
    t: &Term,
    d: usize,
    k: usize,
    v: &Vocabulary,
) -> Result<Vec<PartialTreeCode>, EncodeError> {
    if d < 1 {
        return Err(EncodeError::InvalidOptions("depth must be at least 1".to_string()));
    }
    check_vocabulary(t, v)?;
    let codes = t
        .positions()
        .into_iter()
        .map(|center| {
            let node = t.subterm_at(&center).expect("enumerated position");
            let mut slots = Vec::with_capacity(perfect_tree_size(k, d));
            expand_rpt(Some(node), 0, d, k, &mut slots);
            PartialTreeCode { center, slots }
        })
        .collect();
    Ok(codes)
}

fn expand_rpt(node: Option<&Term>, level: usize, d: usize, k: usize, out: &mut Vec<Option<Symbol>>) {
    let head = node.map(|n| n.head().clone());
    if level == d {
        out.push(head);
        return;
    }
    let child = |j: usize| node.and_then(|n| n.args().get(j - 1));
    expand_rpt(child(1), level + 1, d, k, out);
    out.push(head);
    for j in 2..=k {
        expand_rpt(child(j), level + 1, d, k, out);
    }
}

/// One centered partial tree per node: expansion breadth `k + 1`, where
/// branches `1..=k` are the children and branch `k + 1` is the parent link.
/// The walk explores all directions to path length `d`, replacing the edge
/// back toward the arrival node with Empty; the root's parent branch is
/// Empty.
pub fn crpt_encode(
    t: &Term,
    d: usize,
    k: usize,
    v: &Vocabulary,
) -> Result<Vec<PartialTreeCode>, EncodeError> {
    if d < 1 {
        return Err(EncodeError::InvalidOptions("depth must be at least 1".to_string()));
    }
    check_vocabulary(t, v)?;
    let codes = t
        .positions()
        .into_iter()
        .map(|center| {
            let mut slots = Vec::with_capacity(perfect_tree_size(k + 1, d));
            expand_crpt(t, Some(center.clone()), None, 0, d, k, &mut slots);
            PartialTreeCode { center, slots }
        })
        .collect();
    Ok(codes)
}

fn expand_crpt(
    root: &Term,
    here: Option<Position>,
    from: Option<&Position>,
    level: usize,
    d: usize,
    k: usize,
    out: &mut Vec<Option<Symbol>>,
) {
    let node = here.as_ref().map(|p| root.subterm_at(p).expect("valid position"));
    let head = node.map(|n| n.head().clone());
    if level == d {
        out.push(head);
        return;
    }
    let suppress = |candidate: Option<Position>| match (&candidate, from) {
        (Some(c), Some(f)) if c == f => None,
        _ => candidate,
    };
    let child = |j: usize| {
        suppress(match (&here, node) {
            (Some(p), Some(n)) if j <= n.args().len() => Some(p.child(j)),
            _ => None,
        })
    };
    let parent = suppress(here.as_ref().and_then(|p| p.parent()));

    expand_crpt(root, child(1), here.as_ref(), level + 1, d, k, out);
    out.push(head);
    for j in 2..=k {
        expand_crpt(root, child(j), here.as_ref(), level + 1, d, k, out);
    }
    expand_crpt(root, parent, here.as_ref(), level + 1, d, k, out);
}

/// Symbol-agreement matrix of one code, flattened row-major to length `L²`.
///
/// `S[i][j] = 1` iff slots `i ≠ j` hold the same non-Empty symbol; Empty
/// padding never matches anything, including other Empty slots.
pub fn sav(code: &PartialTreeCode) -> Vec<f64> {
    let l = code.slots.len();
    let mut out = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            if i == j {
                continue;
            }
            if let (Some(a), Some(b)) = (&code.slots[i], &code.slots[j]) {
                if a == b {
                    out[i * l + j] = 1.0;
                }
            }
        }
    }
    out
}

/// All positions with path length `1..=p_max`, breadth-first: by length,
/// lexicographic within a length. `<1>` is entry 0.
pub fn position_table(p_max: usize, k: usize) -> Vec<Position> {
    assert!(k <= MAX_ARITY, "breadth {k} exceeds maximum arity {MAX_ARITY}");
    let mut table = vec![Position::root()];
    let mut level = vec![Position::root()];
    for _ in 1..p_max {
        let next: Vec<Position> = level
            .iter()
            .flat_map(|p| (1..=k).map(move |j| p.child(j)))
            .collect();
        table.extend(next.iter().cloned());
        level = next;
    }
    table
}

/// Bijection between `(rule index, position)` pairs and joint classes:
/// `class = rule_index × NP + position_index`.
#[derive(Debug, Clone)]
pub struct ActionCodec {
    rule_count: usize,
    positions: Vec<Position>,
    index: HashMap<Position, usize>,
}

impl ActionCodec {
    pub fn new(rule_count: usize, p_max: usize, k: usize) -> Self {
        let positions = position_table(p_max, k);
        let index = positions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        ActionCodec { rule_count, positions, index }
    }

    pub fn rule_count(&self) -> usize {
        self.rule_count
    }

    /// `NP`: number of addressable positions.
    pub fn num_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn num_classes(&self) -> usize {
        self.rule_count * self.positions.len()
    }

    pub fn position_index(&self, p: &Position) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn position(&self, index: usize) -> &Position {
        &self.positions[index]
    }

    pub fn encode(&self, rule_index: usize, p: &Position) -> Result<usize, EncodeError> {
        if rule_index >= self.rule_count {
            return Err(EncodeError::RuleOutOfRange(rule_index, self.rule_count));
        }
        let position_index = self
            .position_index(p)
            .ok_or_else(|| EncodeError::PositionOutsideTable(p.clone()))?;
        Ok(rule_index * self.positions.len() + position_index)
    }

    pub fn decode(&self, class: usize) -> Result<(usize, &Position), EncodeError> {
        if class >= self.num_classes() {
            return Err(EncodeError::ClassOutOfRange(class, self.num_classes()));
        }
        let np = self.positions.len();
        Ok((class / np, &self.positions[class % np]))
    }
}

/// Indices (within a width-`p_max × k` block) of the ones in the position
/// encoding: slot `i` one-hot of the `(i+1)`-th path element after the root.
fn position_one_indices(p: &Position, p_max: usize, k: usize) -> Result<Vec<u32>, EncodeError> {
    let rest = &p.path()[1..];
    if rest.len() > p_max {
        return Err(EncodeError::PositionTooDeep { position: p.clone(), max_len: p_max + 1 });
    }
    Ok(rest
        .iter()
        .enumerate()
        .map(|(slot, &idx)| {
            assert!(idx <= k, "branch index {idx} exceeds breadth {k}");
            (slot * k + idx - 1) as u32
        })
        .collect())
}

/// Position block as a dense vector of width `p_max × k`; positions deeper
/// than `p_max + 1` path elements do not fit and are rejected.
pub fn encode_position(p: &Position, p_max: usize, k: usize) -> Result<Vec<f64>, EncodeError> {
    let mut out = vec![0.0; p_max * k];
    for idx in position_one_indices(p, p_max, k)? {
        out[idx as usize] = 1.0;
    }
    Ok(out)
}

/// Indices of the ones in the last-`n` action history block, most recent
/// first; missing entries contribute nothing (zero blocks).
fn rar_one_indices(
    history: &[(usize, Position)],
    n: usize,
    codec: &ActionCodec,
) -> Result<Vec<u32>, EncodeError> {
    let c = codec.num_classes();
    let mut out = Vec::new();
    for (block, (rule_index, position)) in history.iter().rev().take(n).enumerate() {
        let class = codec.encode(*rule_index, position)?;
        out.push((block * c + class) as u32);
    }
    Ok(out)
}

/// Action history block as a dense vector of width `n × num_classes`.
pub fn rar_encode(
    history: &[(usize, Position)],
    n: usize,
    codec: &ActionCodec,
) -> Result<Vec<f64>, EncodeError> {
    let mut out = vec![0.0; n * codec.num_classes()];
    for idx in rar_one_indices(history, n, codec)? {
        out[idx as usize] = 1.0;
    }
    Ok(out)
}

/// Per-node input vectors in node pre-order, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInputs {
    pub width: usize,
    /// Per node: sorted indices of the entries equal to one.
    pub vectors: Vec<Vec<u32>>,
}

impl EncodedInputs {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|ones| {
                let mut v = vec![0.0; self.width];
                for &i in ones {
                    v[i as usize] = 1.0;
                }
                v
            })
            .collect()
    }
}

/// A training example: input vectors plus the joint target class.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub inputs: EncodedInputs,
    pub target: usize,
}

/// Total width of one input vector under `opts`.
pub fn input_width(opts: &EncoderOptions, vocab_len: usize, codec: &ActionCodec) -> usize {
    let l = opts.slots_len();
    let mut width = opts.p_max * opts.breadth + l * vocab_len;
    if opts.sav {
        width += l * l;
    }
    if let Some(n) = opts.rar {
        width += n * codec.num_classes();
    }
    width
}

/// Encodes one term (plus its action history, when the options include a
/// history block) into per-node input vectors.
pub fn encode_inputs(
    t: &Term,
    history: &[(usize, Position)],
    opts: &EncoderOptions,
    vocab: &Vocabulary,
    codec: &ActionCodec,
) -> Result<EncodedInputs, EncodeError> {
    opts.validate()?;
    let codes = match opts.mode {
        EncodeMode::Rpt => rpt_encode(t, opts.depth, opts.breadth, vocab)?,
        EncodeMode::Crpt => crpt_encode(t, opts.depth, opts.breadth, vocab)?,
    };
    let l = opts.slots_len();
    let v = vocab.len();
    let pos_width = opts.p_max * opts.breadth;
    let symbols_end = pos_width + l * v;
    let sav_end = if opts.sav { symbols_end + l * l } else { symbols_end };
    let width = input_width(opts, v, codec);

    let rar_ones: Vec<u32> = match opts.rar {
        Some(n) => rar_one_indices(history, n, codec)?
            .into_iter()
            .map(|i| i + sav_end as u32)
            .collect(),
        None => Vec::new(),
    };

    let mut vectors = Vec::with_capacity(codes.len());
    for code in &codes {
        debug_assert_eq!(code.slots.len(), l);
        let mut ones = position_one_indices(&code.center, opts.p_max, opts.breadth)?;
        for (slot, symbol) in code.slots.iter().enumerate() {
            if let Some(sym) = symbol {
                let vslot = vocab
                    .slot(sym.text())
                    .ok_or_else(|| EncodeError::UnknownSymbol(sym.text().to_string()))?;
                ones.push((pos_width + slot * v + vslot) as u32);
            }
        }
        if opts.sav {
            for i in 0..l {
                for j in 0..l {
                    if i != j
                        && code.slots[i].is_some()
                        && code.slots[i] == code.slots[j]
                    {
                        ones.push((symbols_end + i * l + j) as u32);
                    }
                }
            }
        }
        ones.extend_from_slice(&rar_ones);
        ones.sort_unstable();
        vectors.push(ones);
    }
    Ok(EncodedInputs { width, vectors })
}

/// Encodes a training example: inputs for `t` (with history) and the joint
/// class of the step actually taken.
pub fn build_example(
    t: &Term,
    history: &[(usize, Position)],
    rule_index: usize,
    position: &Position,
    opts: &EncoderOptions,
    vocab: &Vocabulary,
    codec: &ActionCodec,
) -> Result<EncodedExample, EncodeError> {
    let inputs = encode_inputs(t, history, opts, vocab, codec)?;
    let target = codec.encode(rule_index, position)?;
    Ok(EncodedExample { inputs, target })
}
