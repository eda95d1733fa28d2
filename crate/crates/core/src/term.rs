//! Expression trees, positions, parsing and printing.
//!
//! Expressions are finite trees of [`Symbol`] nodes with at most
//! [`MAX_ARITY`] children. The concrete grammar understood by [`Term::parse`]
//! covers infix `= + - * / ^` (precedence `^` > `* /` > `+ -` > `=`, all
//! left-associative), function application `F(a)` / `F(a,b)`, parentheses,
//! and numeral literals with an optional leading minus.
//!
//! Every node is addressed by a [`Position`]: the root is `<1>` and child
//! `j` of the node at `p` is `p` with `j` appended. Keeping the root index
//! explicit means the parent of `<1,1>` is spelled `<1>`, so prefix
//! relationships between paths mirror ancestor relationships in the tree.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Maximum number of children per node (unary and binary operators only).
pub const MAX_ARITY: usize = 2;

/// Classification of a symbol occurrence, given the arity it is used with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Constant,
    Variable,
    Functor,
    Numeral,
}

/// An interned token: operator, functor name, constant, variable, or numeral.
///
/// Classification is purely lexical: digit-only tokens (with optional leading
/// `-`) are numerals, `u` followed by digits is reserved for machine-introduced
/// constants, any other token starting with a lower-case letter is a variable,
/// and everything else is a constant (or functor when applied to arguments).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    text: String,
}

impl Symbol {
    pub fn new(text: impl Into<String>) -> Self {
        Symbol { text: text.into() }
    }

    /// The reserved constant `u<n>` introduced by fresh-variable rules.
    pub fn fresh(index: usize) -> Self {
        Symbol::new(format!("u{index}"))
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn is_numeral(&self) -> bool {
        let digits = self.text.strip_prefix('-').unwrap_or(&self.text);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    }

    /// True for the reserved constants `u1`, `u2`, ... (not variables).
    pub fn is_fresh_constant(&self) -> bool {
        match self.text.strip_prefix('u') {
            Some(rest) => !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()),
            None => false,
        }
    }

    pub fn is_variable(&self) -> bool {
        !self.is_numeral()
            && !self.is_fresh_constant()
            && self
                .text
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_lowercase())
    }

    /// Kind of this symbol when it heads a node with `arity` children.
    pub fn kind(&self, arity: usize) -> SymbolKind {
        if arity > 0 {
            SymbolKind::Functor
        } else if self.is_numeral() {
            SymbolKind::Numeral
        } else if self.is_variable() {
            SymbolKind::Variable
        } else {
            SymbolKind::Constant
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Path address of a node: root `<1>`, child `j` of `p` is `p ++ [j]`.
///
/// The derived ordering is lexicographic on the path, which coincides with
/// pre-order over the nodes of any one term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(vec![1])
    }

    /// Child position, `index` 1-based.
    ///
    /// Panics if `index` is outside `1..=MAX_ARITY`.
    pub fn child(&self, index: usize) -> Self {
        assert!(
            (1..=MAX_ARITY).contains(&index),
            "child index {index} outside 1..={MAX_ARITY}"
        );
        let mut path = self.0.clone();
        path.push(index);
        Position(path)
    }

    /// Validates an explicit path (leading root index included).
    pub fn from_path(path: Vec<usize>) -> Result<Self, PositionError> {
        if path.first() != Some(&1) {
            return Err(PositionError::Malformed(path, "path must start with root index 1"));
        }
        if path[1..].iter().any(|&i| !(1..=MAX_ARITY).contains(&i)) {
            return Err(PositionError::Malformed(path, "branch index outside 1..=k"));
        }
        Ok(Position(path))
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    /// Number of path elements; the root has length 1.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.len() == 1
    }

    pub fn parent(&self) -> Option<Position> {
        if self.is_root() {
            None
        } else {
            Some(Position(self.0[..self.0.len() - 1].to_vec()))
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, ">")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PositionError {
    #[error("position {0} does not address a node")]
    OutOfTree(Position),
    #[error("malformed position path {0:?}: {1}")]
    Malformed(Vec<usize>, &'static str),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("arity {arity} of `{head}` exceeds maximum {max}")]
    ArityExceeded { head: String, arity: usize, max: usize },
    #[error("variable `{0}` cannot take arguments")]
    VariableWithArgs(String),
    #[error("numeral `{0}` cannot take arguments")]
    NumeralWithArgs(String),
}

/// An immutable expression tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    head: Symbol,
    args: Vec<Term>,
}

impl Term {
    pub fn new(head: Symbol, args: Vec<Term>) -> Result<Self, TermError> {
        if args.len() > MAX_ARITY {
            return Err(TermError::ArityExceeded {
                head: head.text.clone(),
                arity: args.len(),
                max: MAX_ARITY,
            });
        }
        if !args.is_empty() {
            if head.is_variable() {
                return Err(TermError::VariableWithArgs(head.text.clone()));
            }
            if head.is_numeral() {
                return Err(TermError::NumeralWithArgs(head.text.clone()));
            }
        }
        Ok(Term { head, args })
    }

    pub fn leaf(head: Symbol) -> Self {
        Term { head, args: Vec::new() }
    }

    /// Leaf from a token string (numeral, constant, or variable).
    pub fn atom(text: impl Into<String>) -> Self {
        Term::leaf(Symbol::new(text))
    }

    pub fn unary(head: impl Into<String>, arg: Term) -> Result<Self, TermError> {
        Term::new(Symbol::new(head), vec![arg])
    }

    pub fn binary(head: impl Into<String>, left: Term, right: Term) -> Result<Self, TermError> {
        Term::new(Symbol::new(head), vec![left, right])
    }

    pub fn head(&self) -> &Symbol {
        &self.head
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn kind(&self) -> SymbolKind {
        self.head.kind(self.args.len())
    }

    /// Total node count.
    pub fn size(&self) -> usize {
        1 + self.args.iter().map(Term::size).sum::<usize>()
    }

    /// Maximum node count along a root-to-leaf path (a lone leaf has depth 1).
    pub fn depth(&self) -> usize {
        1 + self.args.iter().map(Term::depth).max().unwrap_or(0)
    }

    /// All positions in pre-order; the first entry is always the root.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        self.collect_positions(Position::root(), &mut out);
        out
    }

    fn collect_positions(&self, here: Position, out: &mut Vec<Position>) {
        out.push(here.clone());
        for (i, arg) in self.args.iter().enumerate() {
            arg.collect_positions(here.child(i + 1), out);
        }
    }

    /// The subtree rooted at `p`.
    pub fn subterm_at(&self, p: &Position) -> Result<&Term, PositionError> {
        let mut node = self;
        for &index in &p.path()[1..] {
            node = node
                .args
                .get(index - 1)
                .ok_or_else(|| PositionError::OutOfTree(p.clone()))?;
        }
        Ok(node)
    }

    /// A copy of `self` with the subtree at `p` replaced by `replacement`.
    pub fn replace_at(&self, p: &Position, replacement: Term) -> Result<Term, PositionError> {
        fn rebuild(node: &Term, rest: &[usize], replacement: Term, full: &Position) -> Result<Term, PositionError> {
            match rest.split_first() {
                None => Ok(replacement),
                Some((&index, tail)) => {
                    if index == 0 || index > node.args.len() {
                        return Err(PositionError::OutOfTree(full.clone()));
                    }
                    let mut args = node.args.clone();
                    args[index - 1] = rebuild(&node.args[index - 1], tail, replacement, full)?;
                    Ok(Term { head: node.head.clone(), args })
                }
            }
        }
        rebuild(self, &p.path()[1..], replacement, p)
    }

    /// Distinct variables, in lexicographic order.
    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<Symbol>) {
        if self.args.is_empty() && self.head.is_variable() {
            out.insert(self.head.clone());
        }
        for arg in &self.args {
            arg.collect_variables(out);
        }
    }

    pub fn is_ground(&self) -> bool {
        (!self.args.is_empty() || !self.head.is_variable())
            && self.args.iter().all(Term::is_ground)
    }

    /// Visits every node's head symbol together with its arity, in pre-order.
    pub fn for_each_symbol(&self, f: &mut impl FnMut(&Symbol, usize)) {
        f(&self.head, self.args.len());
        for arg in &self.args {
            arg.for_each_symbol(f);
        }
    }

    /// True iff some node's head has the given text.
    pub fn contains_head(&self, text: &str) -> bool {
        self.head.text == text || self.args.iter().any(|a| a.contains_head(text))
    }

    pub fn parse(text: &str) -> Result<Term, ParseError> {
        Parser::new(text)?.parse_full()
    }
}

impl FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Term::parse(s)
    }
}

/// Precedence of a binary infix operator; `None` for ordinary functors.
fn infix_precedence(text: &str) -> Option<u8> {
    match text {
        "=" => Some(1),
        "+" | "-" => Some(2),
        "*" | "/" => Some(3),
        "^" => Some(4),
        _ => None,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match (t.args.len(), infix_precedence(t.head.text())) {
                (2, Some(prec)) => {
                    write_child(&t.args[0], prec, false, f)?;
                    write!(f, "{}", t.head)?;
                    write_child(&t.args[1], prec, true, f)
                }
                (0, _) => write!(f, "{}", t.head),
                _ => {
                    write!(f, "{}(", t.head)?;
                    for (i, arg) in t.args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write_node(arg, f)?;
                    }
                    write!(f, ")")
                }
            }
        }

        // Parenthesize a child that binds looser than its parent, or equally
        // tight in right-operand slot (all operators are left-associative).
        fn write_child(t: &Term, parent_prec: u8, is_right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let needs_parens = match (t.args.len(), infix_precedence(t.head.text())) {
                (2, Some(prec)) => prec < parent_prec || (prec == parent_prec && is_right),
                _ => false,
            };
            if needs_parens {
                write!(f, "(")?;
                write_node(t, f)?;
                write!(f, ")")
            } else {
                write_node(t, f)
            }
        }

        write_node(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError { offset, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    next: usize,
    end_offset: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let bytes = text.as_bytes();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let b = bytes[i];
            match b {
                b' ' | b'\t' => i += 1,
                b'(' => {
                    tokens.push((Tok::LParen, i));
                    i += 1;
                }
                b')' => {
                    tokens.push((Tok::RParen, i));
                    i += 1;
                }
                b',' => {
                    tokens.push((Tok::Comma, i));
                    i += 1;
                }
                b'=' | b'+' | b'-' | b'*' | b'/' | b'^' => {
                    tokens.push((Tok::Op(b as char), i));
                    i += 1;
                }
                b'0'..=b'9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    tokens.push((Tok::Number(text[start..i].to_string()), start));
                }
                b'A'..=b'Z' | b'a'..=b'z' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                        i += 1;
                    }
                    tokens.push((Tok::Ident(text[start..i].to_string()), start));
                }
                _ => {
                    return Err(ParseError::new(i, format!("unexpected character `{}`", b as char)));
                }
            }
        }
        Ok(Parser { tokens, next: 0, end_offset: text.len() })
    }

    fn peek(&self) -> Option<&(Tok, usize)> {
        self.tokens.get(self.next)
    }

    fn advance(&mut self) -> Option<(Tok, usize)> {
        let t = self.tokens.get(self.next).cloned();
        if t.is_some() {
            self.next += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end_offset, |&(_, off)| off)
    }

    fn parse_full(&mut self) -> Result<Term, ParseError> {
        let t = self.parse_expr(1)?;
        match self.peek() {
            None => Ok(t),
            Some(&(_, off)) => Err(ParseError::new(off, "unexpected token after expression")),
        }
    }

    fn parse_expr(&mut self, min_prec: u8) -> Result<Term, ParseError> {
        let mut lhs = self.parse_operand()?;
        while let Some(&(Tok::Op(op), _)) = self.peek() {
            let prec = infix_precedence(&op.to_string()).expect("all op tokens are infix");
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.parse_expr(prec + 1)?;
            lhs = Term::binary(op.to_string(), lhs, rhs).expect("binary arity is 2");
        }
        Ok(lhs)
    }

    fn parse_operand(&mut self) -> Result<Term, ParseError> {
        let offset = self.here();
        match self.advance() {
            Some((Tok::Number(n), _)) => Ok(Term::atom(n)),
            Some((Tok::Op('-'), _)) => match self.advance() {
                Some((Tok::Number(n), _)) => Ok(Term::atom(format!("-{n}"))),
                _ => Err(ParseError::new(
                    offset,
                    "unary minus is only allowed on numerals",
                )),
            },
            Some((Tok::Ident(name), _)) => {
                if matches!(self.peek(), Some((Tok::LParen, _))) {
                    let sym = Symbol::new(name.clone());
                    if sym.is_variable() {
                        return Err(ParseError::new(
                            offset,
                            format!("variable `{name}` cannot take arguments"),
                        ));
                    }
                    self.advance();
                    let mut args = vec![self.parse_expr(1)?];
                    while matches!(self.peek(), Some((Tok::Comma, _))) {
                        let (_, comma_off) = self.advance().expect("peeked");
                        if args.len() == MAX_ARITY {
                            return Err(ParseError::new(
                                comma_off,
                                format!("functor arity exceeds {MAX_ARITY}"),
                            ));
                        }
                        args.push(self.parse_expr(1)?);
                    }
                    match self.advance() {
                        Some((Tok::RParen, _)) => {}
                        other => {
                            let off = other.map_or(self.end_offset, |(_, o)| o);
                            return Err(ParseError::new(off, "expected `)` or `,`"));
                        }
                    }
                    Ok(Term::new(sym, args).expect("arity and kind checked"))
                } else {
                    Ok(Term::atom(name))
                }
            }
            Some((Tok::LParen, _)) => {
                let t = self.parse_expr(1)?;
                match self.advance() {
                    Some((Tok::RParen, _)) => Ok(t),
                    other => {
                        let off = other.map_or(self.end_offset, |(_, o)| o);
                        Err(ParseError::new(off, "expected `)`"))
                    }
                }
            }
            _ => Err(ParseError::new(offset, "expected expression")),
        }
    }
}
