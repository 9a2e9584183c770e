//! Rule-driven SQL dialect translation.
//!
//! Queries are parsed into labeled ordered trees ([`tree`]), compared
//! across dialects by an executor oracle ([`oracle`]), shrunk to their
//! dialect-specific core ([`reduce`]), translated with a language model
//! ([`llm`]), mined for tree rewrite rules ([`rule`]) and rewritten with
//! those rules ([`rewrite`]). [`pipeline`] ties the steps together.

pub mod bracket;
pub mod llm;
pub mod oracle;
pub mod pipeline;
pub mod reduce;
pub mod rewrite;
pub mod rule;
pub mod sql;
pub mod tree;

pub use sql::{parse, render, Query};
pub use tree::{Category, TreeNode, TreePath};
