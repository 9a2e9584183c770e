//! Applying translation rules to whole query trees.

mod fresh;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

pub use fresh::FreshNameGenerator;

use crate::rule::{PatternNode, Symbol, TranslationRule};
use crate::tree::{deep_equal, Category, TreeNode, TreePath};

/// Passes made by [`apply_rules`] in fixpoint mode before giving up.
pub const FIXPOINT_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("target symbol {0} is not bound by the match")]
    Unbound(Symbol),
}

/// Values captured by a successful match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    /// `$N` to the matched terminal.
    pub slots: BTreeMap<usize, TreeNode>,
    /// `TREE_N` to the matched subtree.
    pub trees: BTreeMap<usize, TreeNode>,
}

impl Bindings {
    pub fn is_empty(&self) -> bool {
        self.slots.is_empty() && self.trees.is_empty()
    }
}

/// Matches `pat` against `subtree` rooted at the same position.
pub fn pattern_match(subtree: &TreeNode, pat: &PatternNode) -> Option<Bindings> {
    let mut b = Bindings::default();
    match_into(subtree, pat, &mut b).then_some(b)
}

fn bind(map: &mut BTreeMap<usize, TreeNode>, index: usize, node: &TreeNode) -> bool {
    match map.get(&index) {
        Some(prev) => deep_equal(prev, node),
        None => {
            map.insert(index, node.clone());
            true
        }
    }
}

fn match_into(node: &TreeNode, pat: &PatternNode, b: &mut Bindings) -> bool {
    match pat {
        PatternNode::Slot { index, category } => {
            let ok = match category {
                Some(c) => node.category() == *c,
                None => node.category() == Category::Identifier || node.category().is_constant(),
            };
            ok && bind(&mut b.slots, *index, node)
        }
        PatternNode::Tree { index, root_kind } => {
            let ok = !node.is_hole() && root_kind.as_deref().is_none_or(|k| k == node.kind());
            ok && bind(&mut b.trees, *index, node)
        }
        PatternNode::Fresh { .. } => false,
        PatternNode::Concrete { children, .. } => {
            // a length mismatch means some position pairs with the absent
            // sentinel, which nothing matches
            pat.label_equals(node)
                && children.len() == node.children().len()
                && node.children().iter().zip(children).all(|(n, p)| match_into(n, p, b))
        }
    }
}

/// Builds the concrete tree for `pat`. Each `ANYVALUE_N` gets one name per
/// call, shared by all its occurrences.
pub fn instantiate(pat: &PatternNode, b: &Bindings, gen: &mut FreshNameGenerator) -> Result<TreeNode, RewriteError> {
    let mut fresh = BTreeMap::new();
    build(pat, b, gen, &mut fresh)
}

fn build(
    pat: &PatternNode,
    b: &Bindings,
    gen: &mut FreshNameGenerator,
    fresh: &mut BTreeMap<usize, String>,
) -> Result<TreeNode, RewriteError> {
    Ok(match pat {
        PatternNode::Concrete { kind, category, text, children } => {
            if *category == Category::Nonterminal {
                let kids = children.iter().map(|c| build(c, b, gen, fresh)).collect::<Result<Vec<_>, _>>()?;
                TreeNode::nonterminal(kind.clone(), kids)
            } else {
                TreeNode::terminal(*category, text.clone())
            }
        }
        PatternNode::Slot { index, .. } => b.slots.get(index).cloned().ok_or(RewriteError::Unbound(Symbol::Slot(*index)))?,
        PatternNode::Tree { index, .. } => b.trees.get(index).cloned().ok_or(RewriteError::Unbound(Symbol::Tree(*index)))?,
        PatternNode::Fresh { index } => {
            let name = fresh.entry(*index).or_insert_with(|| gen.next_name()).clone();
            TreeNode::identifier(name)
        }
    })
}

/// Output of one rewriting pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub tree: TreeNode,
    /// Where replacements were made. Paths are the same in input and output.
    pub replaced: Vec<TreePath>,
}

/// One pre-order pass of `rule` over `tree`, naming fresh identifiers with
/// `gen`. Replacements are not revisited.
pub fn rewrite_once(tree: &TreeNode, rule: &TranslationRule, gen: &mut FreshNameGenerator) -> Result<Rewrite, RewriteError> {
    let mut replaced = Vec::new();
    let tree = rewrite_node(tree, rule, gen, &mut Vec::new(), &mut replaced)?;
    Ok(Rewrite { tree, replaced })
}

fn rewrite_node(
    node: &TreeNode,
    rule: &TranslationRule,
    gen: &mut FreshNameGenerator,
    path: &mut Vec<usize>,
    replaced: &mut Vec<TreePath>,
) -> Result<TreeNode, RewriteError> {
    if let Some(b) = pattern_match(node, &rule.source) {
        replaced.push(TreePath::from_indices(path.clone()));
        return instantiate(&rule.target, &b, gen);
    }
    if node.children().is_empty() {
        return Ok(node.clone());
    }
    let mut kids = Vec::with_capacity(node.children().len());
    for (i, c) in node.children().iter().enumerate() {
        path.push(i);
        kids.push(rewrite_node(c, rule, gen, path, replaced)?);
        path.pop();
    }
    Ok(node.with_children(kids))
}

/// Applies `rule` once over the whole tree. Returns the new tree and the
/// number of replacements.
pub fn apply_rule(tree: &TreeNode, rule: &TranslationRule) -> Result<(TreeNode, usize), RewriteError> {
    let mut gen = FreshNameGenerator::for_tree(tree);
    let r = rewrite_once(tree, rule, &mut gen)?;
    Ok((r.tree, r.replaced.len()))
}

/// Match counts per rule id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ApplyReport {
    pub matches: BTreeMap<String, usize>,
    pub passes: usize,
}

impl ApplyReport {
    pub fn total(&self) -> usize {
        self.matches.values().sum()
    }

    /// Ids of rules that fired at least once.
    pub fn fired(&self) -> Vec<String> {
        self.matches.iter().filter(|(_, &n)| n > 0).map(|(id, _)| id.clone()).collect()
    }
}

/// Applies each rule in order. With `fixpoint`, repeats whole passes until
/// one makes no replacement or [`FIXPOINT_CAP`] passes have run.
pub fn apply_rules(tree: &TreeNode, rules: &[TranslationRule], fixpoint: bool) -> Result<(TreeNode, ApplyReport), RewriteError> {
    let mut report = ApplyReport::default();
    for r in rules {
        report.matches.entry(r.id.clone()).or_insert(0);
    }
    let mut cur = tree.clone();
    let cap = if fixpoint { FIXPOINT_CAP } else { 1 };
    while report.passes < cap {
        report.passes += 1;
        let mut changed = 0;
        for r in rules {
            let (next, n) = apply_rule(&cur, r)?;
            cur = next;
            changed += n;
            *report.matches.get_mut(&r.id).expect("seeded") += n;
        }
        if changed == 0 {
            break;
        }
    }
    Ok((cur, report))
}
