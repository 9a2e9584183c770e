//! Bracket notation: `tree := "(" label tree* ")"`.
//!
//! Nonterminals are labeled with their rule name, terminals with their
//! lexeme. `(`, `)` and `\` inside labels are escaped with a backslash.
//! A leaf's category is recovered from the lexeme's shape:
//!
//! * `'...'` string literal, `"..."` quoted identifier, digits numeric literal;
//! * a word with no lowercase letters is a keyword, any other word an identifier;
//! * everything else is punctuation.
//!
//! A word terminal whose shape would be misread (an all-uppercase
//! identifier, or any lexeme shaped like a pattern symbol such as `$1`,
//! `TREE_2` or `ANYVALUE`) is written with its first character escaped. An
//! escaped first character forces a word to read back as an identifier and
//! never as a pattern symbol.
//!
//! Nonterminal labels are read case-insensitively and stored lowercase, so
//! `(Constinterval(INTERVAL))` and `(constinterval(INTERVAL))` are the same tree.

use thiserror::Error;

use crate::tree::{Category, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bracket notation error at offset {offset}: {message}")]
pub struct BracketError {
    pub offset: usize,
    pub message: String,
}

impl BracketError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        BracketError { offset, message: message.into() }
    }
}

/// Renders `tree` in bracket notation.
pub fn to_bracket(tree: &TreeNode) -> String {
    let mut out = String::new();
    write_node(tree, &mut out);
    out
}

fn write_node(node: &TreeNode, out: &mut String) {
    out.push('(');
    if node.is_terminal() {
        write_label(node.text(), needs_leading_escape(node.category(), node.text()), out);
    } else {
        write_label(node.kind(), false, out);
    }
    for child in node.children() {
        write_node(child, out);
    }
    out.push(')');
}

pub(crate) fn write_label(label: &str, escape_first: bool, out: &mut String) {
    for (i, c) in label.chars().enumerate() {
        if matches!(c, '(' | ')' | '\\') || (i == 0 && escape_first) {
            out.push('\\');
        }
        out.push(c);
    }
}

pub(crate) fn needs_leading_escape(category: Category, text: &str) -> bool {
    is_reserved_symbol(text) || classify_leaf(text, false) != category
}

/// True for labels shaped like a pattern symbol: `$N`, `TREE_N`, `ANYVALUE`, `ANYVALUE_N`.
pub fn is_reserved_symbol(label: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if let Some(rest) = label.strip_prefix('$') {
        return digits(rest);
    }
    if let Some(rest) = label.strip_prefix("TREE_") {
        return digits(rest);
    }
    if label == "ANYVALUE" {
        return true;
    }
    label.strip_prefix("ANYVALUE_").is_some_and(digits)
}

/// Category of a leaf label. `first_escaped` marks a leading backslash
/// escape, which forces words to identifiers.
pub fn classify_leaf(text: &str, first_escaped: bool) -> Category {
    let Some(first) = text.chars().next() else {
        return Category::Punctuation;
    };
    if first == '\'' {
        return Category::StringLiteral;
    }
    if first == '"' {
        return Category::Identifier;
    }
    if is_numeric_lexeme(text) {
        return Category::NumericLiteral;
    }
    if is_word(text) {
        let keyword_shape = first.is_ascii_alphabetic() && !text.chars().any(|c| c.is_lowercase());
        if keyword_shape && !first_escaped {
            return Category::Keyword;
        }
        return Category::Identifier;
    }
    Category::Punctuation
}

fn is_word(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

/// `123`, `1.5`, `1.`, `.5`, `1e10`, `2.5E-3`.
pub fn is_numeric_lexeme(text: &str) -> bool {
    let bytes = text.as_bytes();
    let mut i = 0;
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == bytes.len()
}

/// Untyped bracket tree: labels plus the leading-escape flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawNode {
    pub label: String,
    pub first_escaped: bool,
    pub children: Vec<RawNode>,
}

pub(crate) fn parse_raw(input: &str) -> Result<RawNode, BracketError> {
    let chars: Vec<char> = input.chars().collect();
    let mut pos = 0;
    skip_ws(&chars, &mut pos);
    let node = parse_raw_node(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(BracketError::new(pos, "trailing input after tree"));
    }
    Ok(node)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_raw_node(chars: &[char], pos: &mut usize) -> Result<RawNode, BracketError> {
    if chars.get(*pos) != Some(&'(') {
        return Err(BracketError::new(*pos, "expected '('"));
    }
    *pos += 1;
    let label_start = *pos;
    let mut label: Vec<(char, bool)> = Vec::new();
    loop {
        match chars.get(*pos) {
            None => return Err(BracketError::new(*pos, "unterminated tree")),
            Some('(') | Some(')') => break,
            Some('\\') => {
                let escaped = chars.get(*pos + 1).ok_or_else(|| BracketError::new(*pos, "dangling escape"))?;
                label.push((*escaped, true));
                *pos += 2;
            }
            Some(&c) => {
                label.push((c, false));
                *pos += 1;
            }
        }
    }
    while label.first().is_some_and(|&(c, esc)| !esc && c.is_whitespace()) {
        label.remove(0);
    }
    while label.last().is_some_and(|&(c, esc)| !esc && c.is_whitespace()) {
        label.pop();
    }
    if label.is_empty() {
        return Err(BracketError::new(label_start, "empty label"));
    }
    let first_escaped = label[0].1;
    let label: String = label.into_iter().map(|(c, _)| c).collect();
    let mut children = Vec::new();
    loop {
        skip_ws(chars, pos);
        match chars.get(*pos) {
            Some('(') => children.push(parse_raw_node(chars, pos)?),
            Some(')') => {
                *pos += 1;
                break;
            }
            None => return Err(BracketError::new(*pos, "unterminated tree")),
            Some(c) => return Err(BracketError::new(*pos, format!("unexpected character {c:?} between subtrees"))),
        }
    }
    Ok(RawNode { label, first_escaped, children })
}

/// Parses bracket notation back into a tree. Leaves become terminals,
/// labels with children become nonterminals with lowercased kinds.
pub fn from_bracket(input: &str) -> Result<TreeNode, BracketError> {
    Ok(raw_to_tree(&parse_raw(input)?))
}

pub(crate) fn raw_to_tree(raw: &RawNode) -> TreeNode {
    if raw.children.is_empty() {
        TreeNode::terminal(classify_leaf(&raw.label, raw.first_escaped), raw.label.clone())
    } else {
        TreeNode::nonterminal(raw.label.to_lowercase(), raw.children.iter().map(raw_to_tree).collect())
    }
}
