use std::collections::HashSet;

use crate::tree::{Category, TreeNode};

pub const DEFAULT_PREFIX: &str = "rise_";

/// Emits `prefix1`, `prefix2`, ... skipping names already taken. Comparison
/// is case-insensitive.
#[derive(Debug, Clone)]
pub struct FreshNameGenerator {
    prefix: String,
    counter: u64,
    reserved: HashSet<String>,
}

impl FreshNameGenerator {
    pub fn new(prefix: impl Into<String>) -> Self {
        FreshNameGenerator { prefix: prefix.into(), counter: 0, reserved: HashSet::new() }
    }

    /// Default prefix, with every identifier in `tree` reserved.
    pub fn for_tree(tree: &TreeNode) -> Self {
        let mut g = FreshNameGenerator::new(DEFAULT_PREFIX);
        g.reserve_tree(tree);
        g
    }

    pub fn reserve(&mut self, name: &str) {
        self.reserved.insert(name.to_lowercase());
    }

    pub fn reserve_tree(&mut self, tree: &TreeNode) {
        for n in tree.iter().filter(|n| n.category() == Category::Identifier) {
            self.reserve(n.text());
        }
    }

    pub fn next_name(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("{}{}", self.prefix, self.counter);
            if self.reserved.insert(name.to_lowercase()) {
                return name;
            }
        }
    }
}
