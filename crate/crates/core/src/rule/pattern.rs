//! Tree patterns: concrete nodes plus the abstract leaves `$N`, `TREE_N`
//! and `ANYVALUE`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::bracket::{self, classify_leaf, is_reserved_symbol, needs_leading_escape, write_label, RawNode};
use crate::tree::{terminal_kind, Category, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternNode {
    Concrete {
        kind: String,
        category: Category,
        text: String,
        children: Vec<PatternNode>,
    },
    /// `$N`: one identifier or constant. `None` accepts any of those.
    Slot {
        index: usize,
        category: Option<Category>,
    },
    /// `TREE_N`: a whole subtree. `None` accepts any root kind.
    Tree {
        index: usize,
        root_kind: Option<String>,
    },
    /// `ANYVALUE` / `ANYVALUE_N`: a freshly generated identifier.
    Fresh {
        index: usize,
    },
}

/// Symbol of an abstract leaf, as written in bracket notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Slot(usize),
    Tree(usize),
    Fresh(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Slot(i) => write!(f, "${i}"),
            Symbol::Tree(i) => write!(f, "TREE_{i}"),
            Symbol::Fresh(1) => f.write_str("ANYVALUE"),
            Symbol::Fresh(i) => write!(f, "ANYVALUE_{i}"),
        }
    }
}

impl Symbol {
    pub fn parse(label: &str) -> Option<Symbol> {
        if !is_reserved_symbol(label) {
            return None;
        }
        let num = |s: &str| s.parse::<usize>().ok();
        if let Some(n) = label.strip_prefix('$') {
            return num(n).map(Symbol::Slot);
        }
        if let Some(n) = label.strip_prefix("TREE_") {
            return num(n).map(Symbol::Tree);
        }
        match label.strip_prefix("ANYVALUE_") {
            Some(n) => num(n).map(Symbol::Fresh),
            None => Some(Symbol::Fresh(1)),
        }
    }
}

/// What a symbol stands for beyond its name: the category of a `$N`, the
/// root kind of a `TREE_N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolDecl {
    Category(Category),
    RootKind(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error(transparent)]
    Bracket(#[from] bracket::BracketError),
    #[error("pattern symbol {0} cannot have children")]
    SymbolWithChildren(String),
    #[error("declaration for {symbol}: {message}")]
    BadDeclaration { symbol: String, message: String },
}

impl PatternNode {
    /// Concrete copy of a tree.
    pub fn from_tree(tree: &TreeNode) -> PatternNode {
        PatternNode::Concrete {
            kind: tree.kind().to_string(),
            category: tree.category(),
            text: tree.text().to_string(),
            children: tree.children().iter().map(PatternNode::from_tree).collect(),
        }
    }

    pub fn concrete_terminal(category: Category, text: impl Into<String>) -> PatternNode {
        let text = text.into();
        PatternNode::Concrete { kind: terminal_kind(category, &text), category, text, children: Vec::new() }
    }

    pub fn symbol(&self) -> Option<Symbol> {
        match self {
            PatternNode::Concrete { .. } => None,
            PatternNode::Slot { index, .. } => Some(Symbol::Slot(*index)),
            PatternNode::Tree { index, .. } => Some(Symbol::Tree(*index)),
            PatternNode::Fresh { index } => Some(Symbol::Fresh(*index)),
        }
    }

    pub fn is_abstract(&self) -> bool {
        self.symbol().is_some()
    }

    pub fn children(&self) -> &[PatternNode] {
        match self {
            PatternNode::Concrete { children, .. } => children,
            _ => &[],
        }
    }

    pub fn kind(&self) -> Option<&str> {
        match self {
            PatternNode::Concrete { kind, .. } => Some(kind),
            _ => None,
        }
    }

    /// Same kind, category and text as `node`, ignoring children. Abstract
    /// leaves never compare equal here.
    pub fn label_equals(&self, node: &TreeNode) -> bool {
        matches!(self, PatternNode::Concrete { kind, category, text, .. }
            if kind == node.kind() && *category == node.category() && text == node.text())
    }

    /// The concrete tree, if the pattern has no abstract leaves.
    pub fn to_tree(&self) -> Option<TreeNode> {
        match self {
            PatternNode::Concrete { kind, category, text, children } => {
                if *category == Category::Nonterminal {
                    let children = children.iter().map(PatternNode::to_tree).collect::<Option<Vec<_>>>()?;
                    Some(TreeNode::nonterminal(kind.clone(), children))
                } else {
                    Some(TreeNode::terminal(*category, text.clone()))
                }
            }
            _ => None,
        }
    }

    /// Pre-order walk.
    pub fn iter(&self) -> impl Iterator<Item = &PatternNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children().iter().rev());
            Some(node)
        })
    }

    pub fn node_count(&self) -> usize {
        self.iter().count()
    }

    /// Abstract leaves with their declarations, in pre-order.
    pub fn symbols(&self) -> Vec<(Symbol, Option<SymbolDecl>)> {
        self.iter()
            .filter_map(|n| match n {
                PatternNode::Concrete { .. } => None,
                PatternNode::Slot { index, category } => Some((Symbol::Slot(*index), category.map(SymbolDecl::Category))),
                PatternNode::Tree { index, root_kind } => Some((Symbol::Tree(*index), root_kind.clone().map(SymbolDecl::RootKind))),
                PatternNode::Fresh { index } => Some((Symbol::Fresh(*index), None)),
            })
            .collect()
    }

    pub fn to_bracket(&self) -> String {
        let mut out = String::new();
        self.write_bracket(&mut out);
        out
    }

    fn write_bracket(&self, out: &mut String) {
        out.push('(');
        match self {
            PatternNode::Concrete { kind, category, text, children } => {
                if *category == Category::Nonterminal {
                    write_label(kind, false, out);
                } else {
                    write_label(text, needs_leading_escape(*category, text), out);
                }
                for c in children {
                    c.write_bracket(out);
                }
            }
            abstract_node => out.push_str(&abstract_node.symbol().expect("abstract").to_string()),
        }
        out.push(')');
    }

    /// Parses a pattern. `decls` supplies slot categories and subtree root
    /// kinds; undeclared symbols are unconstrained.
    pub fn from_bracket(input: &str, decls: &BTreeMap<String, String>) -> Result<PatternNode, PatternError> {
        let raw = bracket::parse_raw(input)?;
        raw_to_pattern(&raw, decls)
    }

    /// Declarations as they appear in a rule file: `$N` to a category name,
    /// `TREE_N` to a root kind.
    pub fn declarations(&self) -> BTreeMap<String, String> {
        self.symbols()
            .into_iter()
            .filter_map(|(sym, decl)| {
                let value = match decl? {
                    SymbolDecl::Category(c) => c.as_str().to_string(),
                    SymbolDecl::RootKind(k) => k,
                };
                Some((sym.to_string(), value))
            })
            .collect()
    }
}

fn raw_to_pattern(raw: &RawNode, decls: &BTreeMap<String, String>) -> Result<PatternNode, PatternError> {
    if !raw.first_escaped {
        if let Some(sym) = Symbol::parse(&raw.label) {
            if !raw.children.is_empty() {
                return Err(PatternError::SymbolWithChildren(raw.label.clone()));
            }
            let decl = decls.get(&raw.label);
            let bad = |message: &str| PatternError::BadDeclaration { symbol: raw.label.clone(), message: message.into() };
            return Ok(match sym {
                Symbol::Slot(index) => {
                    let category = match decl {
                        None => None,
                        Some(name) => match Category::parse(name) {
                            Some(c @ (Category::Identifier | Category::StringLiteral | Category::NumericLiteral)) => Some(c),
                            _ => return Err(bad("expected identifier, string-literal or numeric-literal")),
                        },
                    };
                    PatternNode::Slot { index, category }
                }
                Symbol::Tree(index) => {
                    if decl.is_some_and(|k| k.trim().is_empty()) {
                        return Err(bad("empty root kind"));
                    }
                    PatternNode::Tree { index, root_kind: decl.map(|k| k.to_lowercase()) }
                }
                Symbol::Fresh(index) => {
                    if decl.is_some() {
                        return Err(bad("ANYVALUE takes no declaration"));
                    }
                    PatternNode::Fresh { index }
                }
            });
        }
    }
    if raw.children.is_empty() {
        let category = classify_leaf(&raw.label, raw.first_escaped);
        return Ok(PatternNode::concrete_terminal(category, raw.label.clone()));
    }
    let children = raw.children.iter().map(|c| raw_to_pattern(c, decls)).collect::<Result<Vec<_>, _>>()?;
    Ok(PatternNode::Concrete { kind: raw.label.to_lowercase(), category: Category::Nonterminal, text: String::new(), children })
}

impl fmt::Display for PatternNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracket())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decls(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn symbols_round_trip() {
        let d = decls(&[("$1", "numeric-literal"), ("TREE_1", "select_with_parens")]);
        let s = "(x(TREE_1)($1)(ANYVALUE)(ANYVALUE_2)(\\$1))";
        let p = PatternNode::from_bracket(s, &d).unwrap();
        let kids = p.children();
        assert_eq!(kids[0], PatternNode::Tree { index: 1, root_kind: Some("select_with_parens".into()) });
        assert_eq!(kids[1], PatternNode::Slot { index: 1, category: Some(Category::NumericLiteral) });
        assert_eq!(kids[2], PatternNode::Fresh { index: 1 });
        assert_eq!(kids[3], PatternNode::Fresh { index: 2 });
        assert_eq!(kids[4], PatternNode::concrete_terminal(Category::Punctuation, "$1"));
        assert_eq!(p.to_bracket(), s);
        assert_eq!(p.declarations(), d);
    }

    #[test]
    fn symbols_cannot_have_children() {
        let err = PatternNode::from_bracket("(TREE_1(x))", &BTreeMap::new()).unwrap_err();
        assert_eq!(err, PatternError::SymbolWithChildren("TREE_1".into()));
    }

    #[test]
    fn bad_slot_declaration() {
        let err = PatternNode::from_bracket("(x($1))", &decls(&[("$1", "keyword")])).unwrap_err();
        assert!(matches!(err, PatternError::BadDeclaration { .. }));
    }

    #[test]
    fn concrete_pattern_converts_back() {
        let t = crate::sql::parse("SELECT 1").unwrap();
        assert_eq!(PatternNode::from_tree(&t).to_tree(), Some(t.clone()));
        assert_eq!(PatternNode::from_tree(&t).to_bracket(), bracket::to_bracket(&t));
    }
}
