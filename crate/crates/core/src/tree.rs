//! Labeled ordered trees, positional paths and structural comparison.
//!
//! A [`TreeNode`] is an immutable value: every edit returns a fresh tree.
//! Terminal kinds are a pure function of category and lexeme (see
//! [`terminal_kind`]), which is what lets the bracket notation store a
//! terminal as its lexeme alone.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Nonterminal,
    Identifier,
    StringLiteral,
    NumericLiteral,
    Keyword,
    Punctuation,
    /// The hole left behind by [`remainder`]. Never produced by the parser.
    Hole,
}

impl Category {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Category::Nonterminal | Category::Hole)
    }

    pub fn is_constant(self) -> bool {
        matches!(self, Category::StringLiteral | Category::NumericLiteral)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Nonterminal => "nonterminal",
            Category::Identifier => "identifier",
            Category::StringLiteral => "string-literal",
            Category::NumericLiteral => "numeric-literal",
            Category::Keyword => "keyword",
            Category::Punctuation => "punctuation",
            Category::Hole => "hole",
        }
    }
}

impl Category {
    /// Inverse of [`Category::as_str`].
    pub fn parse(name: &str) -> Option<Category> {
        [
            Category::Nonterminal,
            Category::Identifier,
            Category::StringLiteral,
            Category::NumericLiteral,
            Category::Keyword,
            Category::Punctuation,
            Category::Hole,
        ]
        .into_iter()
        .find(|c| c.as_str() == name)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Token class of a terminal, derived from its category and lexeme.
pub fn terminal_kind(category: Category, text: &str) -> String {
    match category {
        Category::Identifier => "IDENT".to_string(),
        Category::StringLiteral => "SCONST".to_string(),
        Category::NumericLiteral => {
            if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
                "ICONST".to_string()
            } else {
                "FCONST".to_string()
            }
        }
        Category::Keyword | Category::Punctuation => text.to_string(),
        Category::Nonterminal => String::new(),
        Category::Hole => HOLE_KIND.to_string(),
    }
}

const HOLE_KIND: &str = "<hole>";

/// A node of a labeled ordered tree.
///
/// Derived equality is deep equality: kind, category, text and children
/// compared recursively.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeNode {
    kind: String,
    category: Category,
    text: String,
    children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn nonterminal(kind: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode { kind: kind.into(), category: Category::Nonterminal, text: String::new(), children }
    }

    /// Builds a terminal. Panics if `category` is not a terminal category.
    pub fn terminal(category: Category, text: impl Into<String>) -> Self {
        assert!(category.is_terminal(), "{category} is not a terminal category");
        let text = text.into();
        TreeNode { kind: terminal_kind(category, &text), category, text, children: Vec::new() }
    }

    pub fn keyword(text: &str) -> Self {
        Self::terminal(Category::Keyword, text.to_ascii_uppercase())
    }

    pub fn identifier(text: impl Into<String>) -> Self {
        Self::terminal(Category::Identifier, text)
    }

    pub fn punct(text: &str) -> Self {
        Self::terminal(Category::Punctuation, text)
    }

    pub fn hole() -> Self {
        TreeNode { kind: HOLE_KIND.to_string(), category: Category::Hole, text: String::new(), children: Vec::new() }
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn children(&self) -> &[TreeNode] {
        &self.children
    }

    pub fn child(&self, index: usize) -> Option<&TreeNode> {
        self.children.get(index)
    }

    pub fn is_terminal(&self) -> bool {
        self.category.is_terminal()
    }

    pub fn is_hole(&self) -> bool {
        self.category == Category::Hole
    }

    /// Returns a copy with the children replaced.
    pub fn with_children(&self, children: Vec<TreeNode>) -> TreeNode {
        TreeNode { kind: self.kind.clone(), category: self.category, text: self.text.clone(), children }
    }

    /// Label used in bracket notation and diagnostics: the rule name for
    /// nonterminals, the lexeme for terminals.
    pub fn label(&self) -> &str {
        match self.category {
            Category::Nonterminal | Category::Hole => &self.kind,
            _ => &self.text,
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TreeNode::node_count).sum::<usize>()
    }

    /// Terminals in left-to-right order.
    pub fn terminals(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        collect_terminals(self, &mut out);
        out
    }

    pub fn token_count(&self) -> usize {
        if self.is_terminal() {
            1
        } else {
            self.children.iter().map(TreeNode::token_count).sum()
        }
    }

    pub fn contains_hole(&self) -> bool {
        self.is_hole() || self.children.iter().any(TreeNode::contains_hole)
    }

    /// Pre-order iterator over all nodes.
    pub fn iter(&self) -> impl Iterator<Item = &TreeNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }
}

fn collect_terminals<'a>(node: &'a TreeNode, out: &mut Vec<&'a TreeNode>) {
    if node.is_terminal() {
        out.push(node);
    }
    for child in &node.children {
        collect_terminals(child, out);
    }
}

/// Deep structural equality.
pub fn deep_equal(a: &TreeNode, b: &TreeNode) -> bool {
    a == b
}

/// Node-level equality ignoring children.
pub fn shallow_equal(a: &TreeNode, b: &TreeNode) -> bool {
    a.kind == b.kind && a.category == b.category && a.text == b.text
}

/// Shallow equality where `None` is the absent sibling produced by aligning
/// child lists of different lengths. Absent is unequal to everything,
/// including another absent.
pub fn shallow_equal_aligned(a: Option<&TreeNode>, b: Option<&TreeNode>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => shallow_equal(a, b),
        _ => false,
    }
}

/// Zero-based child indices from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreePath(Vec<usize>);

impl TreePath {
    pub fn root() -> Self {
        TreePath(Vec::new())
    }

    pub fn from_indices(indices: Vec<usize>) -> Self {
        TreePath(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> TreePath {
        let mut indices = self.0.clone();
        indices.push(index);
        TreePath(indices)
    }

    pub fn parent(&self) -> Option<(TreePath, usize)> {
        let (&last, rest) = self.0.split_last()?;
        Some((TreePath(rest.to_vec()), last))
    }

    /// True if `self` is a proper or improper prefix of `other`.
    pub fn is_prefix_of(&self, other: &TreePath) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn resolve<'a>(&self, tree: &'a TreeNode) -> Option<&'a TreeNode> {
        let mut node = tree;
        for &i in &self.0 {
            node = node.children.get(i)?;
        }
        Some(node)
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("path {0} does not resolve in the tree")]
    UnresolvedPath(TreePath),
    #[error("cannot remove the root node")]
    RootRemoval,
}

/// A tree in which exactly one subtree has been replaced by a hole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Remainder {
    tree: TreeNode,
}

impl Remainder {
    pub fn tree(&self) -> &TreeNode {
        &self.tree
    }

    pub fn into_tree(self) -> TreeNode {
        self.tree
    }
}

/// Copy of `tree` with the subtree at `path` replaced by the hole marker.
pub fn remainder(tree: &TreeNode, path: &TreePath) -> Result<Remainder, TreeError> {
    replace_at(tree, path, TreeNode::hole()).map(|tree| Remainder { tree })
}

/// Compares `remainder(a, pa)` and `remainder(b, pb)` without materializing
/// either copy.
pub fn remainders_equal(a: &TreeNode, pa: &TreePath, b: &TreeNode, pb: &TreePath) -> bool {
    fn walk(a: &TreeNode, pa: Option<&[usize]>, b: &TreeNode, pb: Option<&[usize]>) -> bool {
        let a_hole = matches!(pa, Some([]));
        let b_hole = matches!(pb, Some([]));
        if a_hole || b_hole {
            return a_hole && b_hole;
        }
        if !shallow_equal(a, b) || a.children.len() != b.children.len() {
            return false;
        }
        a.children.iter().zip(&b.children).enumerate().all(|(i, (ca, cb))| {
            let next_a = pa.and_then(|p| (p[0] == i).then(|| &p[1..]));
            let next_b = pb.and_then(|p| (p[0] == i).then(|| &p[1..]));
            if next_a.is_none() && next_b.is_none() {
                ca == cb
            } else {
                walk(ca, next_a, cb, next_b)
            }
        })
    }
    if pa.resolve(a).is_none() || pb.resolve(b).is_none() {
        return false;
    }
    walk(a, Some(pa.indices()), b, Some(pb.indices()))
}

/// Copy of `tree` with the subtree at `path` replaced by `replacement`.
pub fn replace_at(tree: &TreeNode, path: &TreePath, replacement: TreeNode) -> Result<TreeNode, TreeError> {
    fn go(node: &TreeNode, rest: &[usize], replacement: TreeNode) -> Option<TreeNode> {
        match rest.split_first() {
            None => Some(replacement),
            Some((&i, tail)) => {
                let child = node.children.get(i)?;
                let new_child = go(child, tail, replacement)?;
                let mut children = node.children.clone();
                children[i] = new_child;
                Some(node.with_children(children))
            }
        }
    }
    go(tree, path.indices(), replacement).ok_or_else(|| TreeError::UnresolvedPath(path.clone()))
}

/// Copy of `tree` with the subtree at `path` deleted from its parent's
/// child list.
pub fn remove_at(tree: &TreeNode, path: &TreePath) -> Result<TreeNode, TreeError> {
    let (parent, index) = path.parent().ok_or(TreeError::RootRemoval)?;
    let parent_node = parent.resolve(tree).filter(|p| index < p.children.len()).ok_or_else(|| TreeError::UnresolvedPath(path.clone()))?;
    let mut children = parent_node.children.clone();
    children.remove(index);
    replace_at(tree, &parent, parent_node.with_children(children))
}

/// Pre-order enumeration of every subtree, root first.
pub fn subtrees(tree: &TreeNode) -> Vec<(TreePath, &TreeNode)> {
    fn go<'a>(node: &'a TreeNode, path: TreePath, out: &mut Vec<(TreePath, &'a TreeNode)>) {
        for (i, child) in node.children.iter().enumerate() {
            let child_path = path.child(i);
            out.push((child_path.clone(), child));
            go(child, child_path, out);
        }
    }
    let mut out = vec![(TreePath::root(), tree)];
    go(tree, TreePath::root(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TreeNode {
        // (select (SELECT) (list (a) (,) (b)))
        TreeNode::nonterminal(
            "select",
            vec![
                TreeNode::keyword("SELECT"),
                TreeNode::nonterminal("list", vec![TreeNode::identifier("a"), TreeNode::punct(","), TreeNode::identifier("b")]),
            ],
        )
    }

    #[test]
    fn deep_equal_is_reflexive_and_sees_text() {
        let t = sample();
        assert!(deep_equal(&t, &t.clone()));
        let changed = replace_at(&t, &TreePath::from_indices(vec![1, 2]), TreeNode::identifier("c")).unwrap();
        assert!(!deep_equal(&t, &changed));
    }

    #[test]
    fn shallow_equal_ignores_children() {
        let a = TreeNode::nonterminal("from_clause", vec![TreeNode::identifier("t1")]);
        let b = TreeNode::nonterminal("from_clause", vec![TreeNode::identifier("t2"), TreeNode::punct(",")]);
        assert!(shallow_equal(&a, &b));
        assert!(!shallow_equal(&TreeNode::identifier("t1"), &TreeNode::identifier("t2")));
    }

    #[test]
    fn absent_sibling_is_unequal_to_everything() {
        let node = TreeNode::nonterminal("table_ref", vec![TreeNode::identifier("t")]);
        assert!(!shallow_equal_aligned(Some(&node), None));
        assert!(!shallow_equal_aligned(None, Some(&node)));
        assert!(!shallow_equal_aligned(None, None));
        assert!(!shallow_equal_aligned(Some(&TreeNode::hole()), None));
    }

    #[test]
    fn remainder_of_root_is_lone_hole() {
        let r = remainder(&sample(), &TreePath::root()).unwrap();
        assert_eq!(r.tree(), &TreeNode::hole());
    }

    #[test]
    fn remainder_leaves_input_untouched() {
        let t = sample();
        let before = t.clone();
        let r = remainder(&t, &TreePath::from_indices(vec![1, 2])).unwrap();
        assert_eq!(t, before);
        assert!(r.tree().contains_hole());
        assert_eq!(r.tree().iter().filter(|n| n.is_hole()).count(), 1);
    }

    #[test]
    fn remainder_rejects_bad_path() {
        let err = remainder(&sample(), &TreePath::from_indices(vec![5])).unwrap_err();
        assert_eq!(err, TreeError::UnresolvedPath(TreePath::from_indices(vec![5])));
    }

    #[test]
    fn hole_only_equals_hole() {
        assert!(deep_equal(&TreeNode::hole(), &TreeNode::hole()));
        assert!(!deep_equal(&TreeNode::hole(), &TreeNode::identifier("x")));
    }

    #[test]
    fn remainders_equal_matches_materialized_comparison() {
        let t = sample();
        let u = replace_at(&t, &TreePath::from_indices(vec![1, 2]), TreeNode::identifier("c")).unwrap();
        for (pa, _) in subtrees(&t) {
            for (pb, _) in subtrees(&u) {
                let direct = remainder(&t, &pa).unwrap() == remainder(&u, &pb).unwrap();
                assert_eq!(remainders_equal(&t, &pa, &u, &pb), direct, "{pa} vs {pb}");
            }
        }
    }

    #[test]
    fn subtrees_are_preorder_and_resolve() {
        let t = sample();
        let subs = subtrees(&t);
        assert_eq!(subs.len(), t.node_count());
        assert!(subs[0].0.is_root());
        let labels: Vec<_> = subs.iter().map(|(_, n)| n.label()).collect();
        assert_eq!(labels, ["select", "SELECT", "list", "a", ",", "b"]);
        for (path, node) in subs {
            assert_eq!(path.resolve(&t), Some(node));
        }
        let leaf = TreeNode::identifier("x");
        assert_eq!(subtrees(&leaf).len(), 1);
    }

    #[test]
    fn remove_at_drops_child() {
        let t = sample();
        let removed = remove_at(&t, &TreePath::from_indices(vec![1, 0])).unwrap();
        assert_eq!(removed.terminals().len(), 3);
        assert_eq!(remove_at(&t, &TreePath::root()), Err(TreeError::RootRemoval));
    }

    #[test]
    fn terminal_kinds_follow_lexeme() {
        assert_eq!(TreeNode::terminal(Category::NumericLiteral, "100").kind(), "ICONST");
        assert_eq!(TreeNode::terminal(Category::NumericLiteral, "1.5").kind(), "FCONST");
        assert_eq!(TreeNode::keyword("select").text(), "SELECT");
        assert_eq!(TreeNode::identifier("T1").kind(), "IDENT");
    }
}
