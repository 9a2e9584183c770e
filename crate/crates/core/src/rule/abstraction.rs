//! Generalizes a concrete rule by replacing dialect-irrelevant parts with
//! abstract symbols.

use crate::tree::{Category, TreeNode};

use super::pattern::PatternNode;
use super::RuleError;

struct Abstractor {
    source: PatternNode,
    target: PatternNode,
    next_slot: usize,
    next_tree: usize,
    next_fresh: usize,
}

/// Walks the target pattern top-down. Identifiers and constants that also
/// occur in the source become a shared `$N`; identifiers new in the target
/// become `ANYVALUE`; nonterminal subtrees that occur verbatim in the source
/// become a shared `TREE_N` and are not entered. Every occurrence in both
/// patterns is replaced. The source root itself is never replaced.
pub fn abstract_rule(source: &TreeNode, target: &TreeNode) -> Result<(PatternNode, PatternNode), RuleError> {
    if source.contains_hole() || target.contains_hole() {
        return Err(RuleError::Contract("rule trees cannot contain holes".into()));
    }
    let mut a = Abstractor {
        source: PatternNode::from_tree(source),
        target: PatternNode::from_tree(target),
        next_slot: 1,
        next_tree: 1,
        next_fresh: 1,
    };
    a.visit(&mut Vec::new());
    Ok((a.source, a.target))
}

fn node_at<'a>(p: &'a PatternNode, path: &[usize]) -> &'a PatternNode {
    path.iter().fold(p, |n, &i| &n.children()[i])
}

impl Abstractor {
    fn visit(&mut self, path: &mut Vec<usize>) {
        let node = node_at(&self.target, path).clone();
        let PatternNode::Concrete { category, children, .. } = &node else {
            return;
        };
        match category {
            Category::Identifier => {
                let symbol = if source_has_terminal(&self.source, &node) {
                    self.next_slot += 1;
                    PatternNode::Slot { index: self.next_slot - 1, category: Some(*category) }
                } else {
                    self.next_fresh += 1;
                    PatternNode::Fresh { index: self.next_fresh - 1 }
                };
                self.replace_all(&node, &symbol);
            }
            c if c.is_constant() => {
                if source_has_terminal(&self.source, &node) {
                    self.next_slot += 1;
                    let symbol = PatternNode::Slot { index: self.next_slot - 1, category: Some(*c) };
                    self.replace_all(&node, &symbol);
                }
            }
            Category::Nonterminal => {
                if source_has_subtree(&self.source, &node) {
                    self.next_tree += 1;
                    let root_kind = node.kind().map(str::to_string);
                    let symbol = PatternNode::Tree { index: self.next_tree - 1, root_kind };
                    self.replace_all(&node, &symbol);
                } else {
                    for i in 0..children.len() {
                        path.push(i);
                        self.visit(path);
                        path.pop();
                    }
                }
            }
            _ => {}
        }
    }

    fn replace_all(&mut self, needle: &PatternNode, symbol: &PatternNode) {
        // the source root stays concrete
        let PatternNode::Concrete { children, .. } = &mut self.source else { unreachable!() };
        for c in children.iter_mut() {
            replace_in(c, needle, symbol);
        }
        replace_in(&mut self.target, needle, symbol);
    }
}

fn replace_in(p: &mut PatternNode, needle: &PatternNode, symbol: &PatternNode) {
    if p == needle {
        *p = symbol.clone();
        return;
    }
    if let PatternNode::Concrete { children, .. } = p {
        for c in children {
            replace_in(c, needle, symbol);
        }
    }
}

fn source_has_terminal(source: &PatternNode, terminal: &PatternNode) -> bool {
    source.iter().skip(1).any(|n| n == terminal)
}

fn source_has_subtree(source: &PatternNode, subtree: &PatternNode) -> bool {
    source.iter().skip(1).any(|n| n == subtree)
}
