//! Generators and oracles shared by the property and acceptance suites.
//!
//! Generators take a seeded RNG so the acceptance suite can draw a fixed
//! sample and proptest can drive them from a seed.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rise_core::rule::PatternNode;
use rise_core::tree::{deep_equal, remainder, replace_at, shallow_equal, subtrees, Category, TreeNode, TreePath};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

// ------------------------------------------------------------ random trees

const KINDS: &[&str] = &["expr", "stmt", "list", "a_expr", "x"];
const KEYWORDS: &[&str] = &["SELECT", "FROM", "AS", "LIMIT", "ON"];
const IDENTS: &[&str] = &["a", "b", "t1", "Col"];
const NUMBERS: &[&str] = &["1", "2", "42"];
const STRINGS: &[&str] = &["'x'", "'60 days'"];
const PUNCT: &[&str] = &[",", "(", ")", "+"];

/// A random terminal over a small alphabet, so that label collisions are
/// common.
pub fn small_terminal(rng: &mut impl Rng) -> TreeNode {
    let (cat, pool) = match rng.gen_range(0..5) {
        0 => (Category::Keyword, KEYWORDS),
        1 => (Category::Identifier, IDENTS),
        2 => (Category::NumericLiteral, NUMBERS),
        3 => (Category::StringLiteral, STRINGS),
        _ => (Category::Punctuation, PUNCT),
    };
    TreeNode::terminal(cat, *pool.choose(rng).unwrap())
}

/// A random tree of at most `budget` nodes (at least one). Nonterminals
/// always have children.
pub fn small_tree(rng: &mut impl Rng, budget: usize) -> TreeNode {
    fn go(rng: &mut impl Rng, budget: &mut usize, depth: usize) -> TreeNode {
        *budget -= 1;
        if *budget == 0 || depth > 4 || rng.gen_bool(0.35) {
            return small_terminal(rng);
        }
        let want = rng.gen_range(1..=3);
        let mut kids = Vec::new();
        while kids.len() < want && *budget > 0 {
            kids.push(go(rng, budget, depth + 1));
        }
        TreeNode::nonterminal(*KINDS.choose(rng).unwrap(), kids)
    }
    let mut b = budget.max(1);
    go(rng, &mut b, 0)
}

/// A terminal drawn from lexemes that stress bracket escaping: parens,
/// backslashes, reserved symbol shapes, uppercase identifiers.
pub fn wild_terminal(rng: &mut impl Rng) -> TreeNode {
    const WORDS: &[&str] = &["select", "Foo", "x_1", "TREE_3", "ANYVALUE", "ANYVALUE_2", "LIMIT", "plpgsql", "a$b", "DATE_ADD"];
    const LITERALS: &[&str] = &["'a b'", "'it''s'", "'(x)'", "'back\\slash'", "''", "'60 days'"];
    const NUMS: &[&str] = &["0", "3.14", "1e10", ".5", "2."];
    const SYMS: &[&str] = &["(", ")", "\\", "$$", "$1", "$12", "::", "||", ",", ";", "%", "<>"];
    match rng.gen_range(0..6) {
        0 => TreeNode::terminal(Category::Keyword, ["SELECT", "FROM", "INTERVAL", "DAY"].choose(rng).unwrap().to_string()),
        1 => TreeNode::terminal(Category::Identifier, WORDS.choose(rng).unwrap().to_string()),
        2 => TreeNode::terminal(Category::StringLiteral, LITERALS.choose(rng).unwrap().to_string()),
        3 => TreeNode::terminal(Category::NumericLiteral, NUMS.choose(rng).unwrap().to_string()),
        4 => TreeNode::terminal(Category::Identifier, "\"Quoted Name\""),
        _ => {
            let s = SYMS.choose(rng).unwrap();
            // `$1` read back bare would be a slot; as a tree leaf it is punctuation
            TreeNode::terminal(Category::Punctuation, s.to_string())
        }
    }
}

/// A random tree of up to `budget` nodes over [`wild_terminal`] leaves.
pub fn wild_tree(rng: &mut impl Rng, budget: usize) -> TreeNode {
    fn go(rng: &mut impl Rng, budget: &mut usize, depth: usize) -> TreeNode {
        *budget = budget.saturating_sub(1);
        if *budget == 0 || depth > 6 || rng.gen_bool(0.4) {
            return wild_terminal(rng);
        }
        let want = rng.gen_range(1..=4);
        let mut kids = Vec::new();
        while kids.len() < want && *budget > 0 {
            kids.push(go(rng, budget, depth + 1));
        }
        let kind = ["select_stmt", "a_expr", "func_call", "typename", "k"].choose(rng).unwrap();
        TreeNode::nonterminal(*kind, kids)
    }
    let mut b = budget.max(1);
    go(rng, &mut b, 0)
}

// ------------------------------------------------------- localized edits

/// Applies one random localized edit somewhere in `tree`: relabel a node,
/// replace a subtree, insert a child, or delete a child. The result differs
/// from the input.
pub fn edit_once(rng: &mut impl Rng, tree: &TreeNode) -> TreeNode {
    loop {
        let sites = subtrees(tree);
        let (path, node) = sites.choose(rng).unwrap();
        let edited = match rng.gen_range(0..4) {
            0 => {
                if node.is_terminal() {
                    Some(small_terminal(rng))
                } else {
                    let kind = *KINDS.choose(rng).unwrap();
                    Some(TreeNode::nonterminal(kind, node.children().to_vec()))
                }
            }
            1 => Some(small_tree(rng, 3)),
            2 if !node.is_terminal() => {
                let mut kids = node.children().to_vec();
                let at = rng.gen_range(0..=kids.len());
                kids.insert(at, small_terminal(rng));
                Some(node.with_children(kids))
            }
            3 if node.children().len() > 1 => {
                let mut kids = node.children().to_vec();
                kids.remove(rng.gen_range(0..kids.len()));
                Some(node.with_children(kids))
            }
            _ => None,
        };
        if let Some(new) = edited {
            let out = replace_at(tree, path, new).unwrap();
            if out != *tree {
                return out;
            }
        }
    }
}

/// A pair (s, t) with at most `max_nodes` nodes each, differing by one edit.
pub fn edited_pair(rng: &mut impl Rng, max_nodes: usize) -> (TreeNode, TreeNode) {
    loop {
        let s = small_tree(rng, max_nodes - 2);
        let t = edit_once(rng, &s);
        if s.node_count() <= max_nodes && t.node_count() <= max_nodes {
            return (s, t);
        }
    }
}

/// Exhaustive search for the minimal differing pair. A path qualifies when
/// the two trees are identical once the subtree there is cut out of both.
/// Qualifying paths form a chain from the root; the answer is the deepest
/// one reached through same-label nodes only.
pub fn brute_force_min_pair(s: &TreeNode, t: &TreeNode) -> TreePath {
    let mut qualifying: Vec<TreePath> = subtrees(s)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|p| p.resolve(t).is_some())
        .filter(|p| deep_equal(remainder(s, p).unwrap().tree(), remainder(t, p).unwrap().tree()))
        .collect();
    qualifying.sort_by_key(|p| p.depth());
    let mut best = TreePath::root();
    for p in qualifying.into_iter().skip(1) {
        assert!(best.is_prefix_of(&p), "qualifying paths form a chain");
        if !shallow_equal(p.resolve(s).unwrap(), p.resolve(t).unwrap()) {
            break;
        }
        best = p;
    }
    best
}

// ------------------------------------------------------------ random rules

/// Builds a source pattern from `node`: each child subtree is, at random,
/// kept concrete, turned into a `TREE_N` of its root kind, or, for
/// identifiers and constants, a `$N`. Returns the pattern and the symbols
/// it introduced.
pub fn pattern_from(rng: &mut impl Rng, node: &TreeNode) -> (PatternNode, Vec<PatternNode>) {
    fn go(rng: &mut impl Rng, node: &TreeNode, syms: &mut Vec<PatternNode>, top: bool) -> PatternNode {
        if !top {
            let roll = rng.gen_range(0..4);
            let abstractable = node.category() == Category::Identifier || node.category().is_constant();
            if roll == 0 && abstractable {
                let s = PatternNode::Slot { index: syms.len() + 1, category: Some(node.category()) };
                syms.push(s.clone());
                return s;
            }
            if roll == 1 && !node.is_terminal() {
                let s = PatternNode::Tree { index: syms.len() + 1, root_kind: Some(node.kind().to_string()) };
                syms.push(s.clone());
                return s;
            }
        }
        match PatternNode::from_tree(node) {
            PatternNode::Concrete { kind, category, text, .. } => {
                let children = node.children().iter().map(|c| go(rng, c, syms, false)).collect();
                PatternNode::Concrete { kind, category, text, children }
            }
            other => other,
        }
    }
    let mut syms = Vec::new();
    let p = go(rng, node, &mut syms, true);
    (p, syms)
}

/// A random target pattern over `syms`: a new nonterminal whose children
/// are the symbols in shuffled order, some repeated, plus a fixed marker.
pub fn target_over(rng: &mut impl Rng, syms: &[PatternNode]) -> PatternNode {
    let mut kids: Vec<PatternNode> = syms.to_vec();
    if let Some(s) = syms.choose(rng) {
        kids.push(s.clone());
    }
    kids.shuffle(rng);
    kids.push(PatternNode::from_tree(&TreeNode::keyword("REWRITTEN")));
    PatternNode::Concrete { kind: "rewritten".into(), category: Category::Nonterminal, text: String::new(), children: kids }
}

/// Copy of `tree` with holes at every path in `paths`.
pub fn punch(tree: &TreeNode, paths: &[TreePath]) -> TreeNode {
    paths.iter().fold(tree.clone(), |t, p| replace_at(&t, p, TreeNode::hole()).unwrap())
}

// ------------------------------------------------------------ fresh names

/// Renames `rise_N` identifiers to `fresh_K` by order of first appearance,
/// so trees that differ only in generated names compare equal.
pub fn canonical_fresh_names(tree: &TreeNode) -> TreeNode {
    fn go(node: &TreeNode, seen: &mut BTreeMap<String, String>) -> TreeNode {
        if node.category() == Category::Identifier {
            let lower = node.text().to_lowercase();
            if lower.strip_prefix("rise_").is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())) {
                let n = seen.len() + 1;
                let name = seen.entry(lower).or_insert_with(|| format!("fresh_{n}")).clone();
                return TreeNode::identifier(name);
            }
            return node.clone();
        }
        if node.is_terminal() {
            return node.clone();
        }
        let kids = node.children().iter().map(|c| go(c, seen)).collect();
        node.with_children(kids)
    }
    go(tree, &mut BTreeMap::new())
}

/// Every `*.sql` file under `dir`, recursively, sorted.
pub fn sql_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "sql") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

// ------------------------------------------------------- invariant checks
//
// Each check draws one case from `seed` and reports the first violation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rise_core::bracket::{from_bracket, to_bracket};
use rise_core::oracle::Executor;
use rise_core::pipeline::open_executor;
use rise_core::reduce::RandomReducer;
use rise_core::rewrite::{instantiate, pattern_match, rewrite_once, FreshNameGenerator};
use rise_core::rule::{extract_initial, Provenance, TranslationRule};
use rise_core::{parse, render, Query};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn check_bracket_round_trip(seed: u64) -> Result<(), String> {
    let t = wild_tree(&mut rng(seed), 30);
    let text = to_bracket(&t);
    let back = from_bracket(&text).map_err(|e| format!("{text}: {e}"))?;
    ensure!(back == t, "{text} reads back as {}", to_bracket(&back));
    Ok(())
}

/// Returns whether the answer lay below the root.
pub fn check_extraction(seed: u64, max_nodes: usize) -> Result<bool, String> {
    let (s, t) = edited_pair(&mut rng(seed), max_nodes);
    let e = extract_initial(&s, &t).map_err(|e| e.to_string())?;
    let want = brute_force_min_pair(&s, &t);
    let shown = || format!("{} vs {}", to_bracket(&s), to_bracket(&t));
    ensure!(e.source_path == want && e.target_path == want, "{}: got {} / {}, want {want}", shown(), e.source_path, e.target_path);
    ensure!(Some(&e.source) == want.resolve(&s) && Some(&e.target) == want.resolve(&t), "{}: subtrees differ", shown());
    Ok(!want.is_root())
}

/// Returns the number of replacements.
pub fn check_frame(seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let tree = small_tree(&mut r, 12);
    let sites = subtrees(&tree);
    let (site, node) = sites.choose(&mut r).unwrap();
    let (src, syms) = pattern_from(&mut r, node);
    let rule = TranslationRule::new(src, target_over(&mut r, &syms), Provenance::default(), "");
    let out = rewrite_once(&tree, &rule, &mut FreshNameGenerator::for_tree(&tree)).map_err(|e| e.to_string())?;
    let shown = || format!("{} with {}", to_bracket(&tree), rule.source);
    ensure!(out.replaced.iter().any(|p| p.is_prefix_of(site)), "{}: site {site} not rewritten", shown());
    for (i, a) in out.replaced.iter().enumerate() {
        for b in &out.replaced[i + 1..] {
            ensure!(!a.is_prefix_of(b) && !b.is_prefix_of(a), "{}: nested replacements {a} and {b}", shown());
        }
    }
    ensure!(punch(&tree, &out.replaced) == punch(&out.tree, &out.replaced), "{}: frame changed", shown());
    for p in &out.replaced {
        let b = pattern_match(p.resolve(&tree).unwrap(), &rule.source).ok_or_else(|| format!("{}: {p} does not match", shown()))?;
        let want = instantiate(&rule.target, &b, &mut FreshNameGenerator::new("unused_")).map_err(|e| e.to_string())?;
        ensure!(p.resolve(&out.tree) == Some(&want), "{}: wrong replacement at {p}", shown());
    }
    Ok(out.replaced.len())
}

/// Returns whether the pattern matched.
pub fn check_repeated_slot(seed: u64) -> Result<bool, String> {
    let mut r = rng(seed);
    let (x, mut y) =
        if r.gen_bool(0.5) { (small_terminal(&mut r), small_terminal(&mut r)) } else { (small_tree(&mut r, 3), small_tree(&mut r, 3)) };
    if r.gen_bool(0.3) {
        y = x.clone();
    }
    let slot_ok = |n: &TreeNode| n.category() == Category::Identifier || n.category().is_constant();
    let sym = if slot_ok(&x) && slot_ok(&y) {
        PatternNode::Slot { index: 1, category: None }
    } else {
        PatternNode::Tree { index: 1, root_kind: None }
    };
    let pat = PatternNode::Concrete {
        kind: "pair".into(),
        category: Category::Nonterminal,
        text: String::new(),
        children: vec![sym.clone(), sym],
    };
    let tree = TreeNode::nonterminal("pair", vec![x.clone(), y.clone()]);
    let m = pattern_match(&tree, &pat);
    ensure!(m.is_some() == deep_equal(&x, &y), "{} against {}", to_bracket(&tree), pat);
    if let Some(b) = &m {
        ensure!(b.slots.get(&1).or(b.trees.get(&1)) == Some(&x), "{}: wrong binding", to_bracket(&tree));
    }
    Ok(m.is_some())
}

/// Tries `attempts` random single removals on a reduction fixture query.
/// Returns how many were rejected.
pub fn check_restore_on_failure(seed: u64, attempts: usize) -> Result<usize, String> {
    let mut r = rng(seed);
    let dir = fixtures().join("reduction");
    let files = sql_files(&dir.join("queries"));
    let text = std::fs::read_to_string(files.choose(&mut r).unwrap()).unwrap();
    let tree = parse(&text).map_err(|d| d.to_string())?;
    let mut src = open_executor(dir.join("postgresql").to_str().unwrap()).map_err(|e| e.to_string())?;
    let mut tgt = open_executor(dir.join("mysql").to_str().unwrap()).map_err(|e| e.to_string())?;
    let err = tgt.execute(&Query::new(text.clone(), "postgresql")).map_err(|e| e.to_string())?.error_message.unwrap_or_default();
    let mut reducer = RandomReducer::new(&tree, &mut *src, &mut *tgt, &err, seed).map_err(|e| e.to_string())?;
    let mut rejected = 0;
    for _ in 0..attempts {
        let before = reducer.state().current.clone();
        let paths: Vec<TreePath> = subtrees(&before).into_iter().skip(1).map(|(p, _)| p).collect();
        let p = paths.choose(&mut r).unwrap().clone();
        if reducer.try_remove(std::slice::from_ref(&p)).map_err(|e| e.to_string())? {
            let now = &reducer.state().current;
            ensure!(now.token_count() < before.token_count(), "removing {p} did not shrink the query");
            let again = parse(&render(now).map_err(|e| e.to_string())?).map_err(|d| d.to_string())?;
            ensure!(&again == now, "accepted tree does not re-parse to itself");
        } else {
            rejected += 1;
            ensure!(reducer.state().current == before, "rejected removal of {p} changed the working tree");
        }
    }
    Ok(rejected)
}

/// parse(render(parse(q))) = parse(q) for every fixture query.
pub fn check_parser_round_trip() -> Result<usize, String> {
    let files = sql_files(&fixtures());
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        let t = parse(&text).map_err(|d| format!("{}: {d}", f.display()))?;
        let again = parse(&render(&t).map_err(|e| e.to_string())?).map_err(|d| format!("{}: rendering: {d}", f.display()))?;
        ensure!(again == t, "{}: round trip changed the tree", f.display());
    }
    Ok(files.len())
}
