//! Minimal differing subtree pair of two trees.

use crate::tree::{remainders_equal, shallow_equal_aligned, TreeNode, TreePath};

use super::RuleError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub source: TreeNode,
    pub source_path: TreePath,
    pub target: TreeNode,
    pub target_path: TreePath,
}

/// Descends both trees in lockstep from the root. A position qualifies when
/// everything outside it is identical in both trees. From a qualifying
/// position the walk moves into the first child (left to right) that also
/// qualifies, provided all child pairs so far have matching labels; the
/// deepest position reached is the answer.
pub fn extract_initial(source: &TreeNode, target: &TreeNode) -> Result<Extraction, RuleError> {
    if source == target {
        return Err(RuleError::NoDifference);
    }
    let path = min_diff(source, target, TreePath::root()).expect("the root always qualifies");
    let resolve = |t: &TreeNode| path.resolve(t).expect("qualifying paths resolve").clone();
    Ok(Extraction { source: resolve(source), source_path: path.clone(), target: resolve(target), target_path: path })
}

fn min_diff(source: &TreeNode, target: &TreeNode, path: TreePath) -> Option<TreePath> {
    if !remainders_equal(source, &path, target, &path) {
        return None;
    }
    let a = path.resolve(source)?;
    let b = path.resolve(target)?;
    let num = a.children().len().max(b.children().len());
    for i in 0..num {
        if !shallow_equal_aligned(a.child(i), b.child(i)) {
            return Some(path);
        }
        if let Some(found) = min_diff(source, target, path.child(i)) {
            return Some(found);
        }
    }
    Some(path)
}
