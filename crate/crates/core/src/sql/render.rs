//! Turns a syntax tree back into SQL text.

use thiserror::Error;

use super::grammar::Grammar;
use crate::bracket::is_reserved_symbol;
use crate::tree::{Category, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("tree contains a hole and cannot be rendered")]
    Hole,
    #[error("tree contains unbound pattern symbol {0}")]
    PatternSymbol(String),
}

/// Joins the terminals with single spaces, except where SQL is written
/// tight: before `,` `)` `;`, around `.` and `::`, after `(`, and between a function
/// name and its argument list.
pub fn render(grammar: &Grammar, tree: &TreeNode) -> Result<String, RenderError> {
    let mut out = String::new();
    let mut prev: Option<&TreeNode> = None;
    for leaf in tree.iter().filter(|n| n.is_terminal() || n.is_hole()) {
        match leaf.category() {
            Category::Hole => return Err(RenderError::Hole),
            Category::Keyword | Category::Punctuation if is_reserved_symbol(leaf.text()) => {
                return Err(RenderError::PatternSymbol(leaf.text().to_string()))
            }
            _ => {}
        }
        if let Some(p) = prev {
            if needs_space(grammar, p, leaf) {
                out.push(' ');
            }
        }
        out.push_str(leaf.text());
        prev = Some(leaf);
    }
    Ok(out)
}

/// Keywords that read like calls: `CAST(`, `VARCHAR(20)`.
const TIGHT_BEFORE_PAREN: &[&str] =
    &["CAST", "EXTRACT", "CHAR", "CHARACTER", "DECIMAL", "NUMBER", "NUMERIC", "VARCHAR", "VARCHAR2", "FLOAT"];

fn needs_space(grammar: &Grammar, prev: &TreeNode, next: &TreeNode) -> bool {
    let is_punct = |n: &TreeNode, s: &str| n.category() == Category::Punctuation && n.text() == s;
    if [",", ")", ";", ".", "::"].iter().any(|s| is_punct(next, s)) {
        return false;
    }
    if is_punct(prev, "(") || is_punct(prev, ".") || is_punct(prev, "::") {
        return false;
    }
    if is_punct(prev, "%") && matches!(next.text(), "TYPE" | "ROWTYPE") {
        return false;
    }
    if is_punct(next, "(") {
        let function_like = match prev.category() {
            Category::Identifier => true,
            Category::Keyword => grammar.is_function(prev.text()) || TIGHT_BEFORE_PAREN.contains(&prev.text()),
            _ => false,
        };
        return !function_like;
    }
    true
}
