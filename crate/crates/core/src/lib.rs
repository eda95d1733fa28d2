//! Term rewriting with learned step guidance.
//!
//! The crate is organised bottom-up:
//!
//! * [`term`]: expression trees, positions, parsing and printing.
//! * [`rule`]: rewrite rules, one-way matching, rule application, rule sets
//!   and goal predicates.
//! * [`scheme`]: recorded derivations (question, steps, answer), replay
//!   validation and the line-record file format.
//! * [`search`]: breadth-first search for a minimal derivation.
//! * [`corpus`]: random question generation and train/test splitting.
//! * [`encoding`]: fixed-width vector codes for terms (reduced partial
//!   trees, centered variant, symbol-agreement matrix, action history) and
//!   the action class table.
//! * [`net`]: feedforward network with averaged softmax over a variable
//!   number of input vectors, trained with an improvement-driven learning
//!   rate schedule.
//! * [`model`]: bundles network parameters with the encoder configuration
//!   and vocabulary; binary save/load.
//! * [`guide`]: network-guided rewriting and step-prediction evaluation.

/// Library version, recorded in provenance files written by the CLI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod corpus;
pub mod encoding;
pub mod guide;
pub mod model;
pub mod net;
pub mod rule;
pub mod scheme;
pub mod search;
pub mod term;
