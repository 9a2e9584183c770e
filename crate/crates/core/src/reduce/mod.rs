//! Shrinking a failing query while it keeps failing the same way.
//!
//! [`random_reduce`] deletes random subtrees until no single deletion keeps
//! both constraints: the query still runs on the source executor, and the
//! target executor still reports an error similar to the original one.
//! [`llm_reduce`] then asks a model for a shorter reproducer.

mod llm;

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use llm::{llm_reduce, LlmReduction, LLM_REDUCTION_ITERATIONS};

use crate::llm::LlmError;
use crate::oracle::{error_similarity, Executor, OracleError, SIMILARITY_THRESHOLD};
use crate::sql::{self, Query};
use crate::tree::{remove_at, subtrees, TreeNode, TreePath};

/// Above this many untried candidates, two subtrees are removed at a time.
pub const PAIR_THRESHOLD: usize = 50;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("precondition violated: {0}")]
    Contract(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// What happened to one candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CheckOutcome {
    Accepted,
    /// The rendering does not parse.
    Unparseable {
        message: String,
    },
    /// The re-parsed tree is not smaller.
    NotSmaller,
    SourceFailed {
        message: String,
    },
    TargetSucceeded,
    DifferentError {
        message: String,
        similarity: f64,
    },
}

impl CheckOutcome {
    pub fn is_accepted(&self) -> bool {
        *self == CheckOutcome::Accepted
    }

    pub fn reason(&self) -> String {
        match self {
            CheckOutcome::Accepted => "accepted".into(),
            CheckOutcome::Unparseable { message } => format!("does not parse: {message}"),
            CheckOutcome::NotSmaller => "not smaller".into(),
            CheckOutcome::SourceFailed { message } => format!("fails on the source database: {message}"),
            CheckOutcome::TargetSucceeded => "runs without error on the target database".into(),
            CheckOutcome::DifferentError { message, similarity } => {
                format!("different error on the target database ({similarity:.2}): {message}")
            }
        }
    }
}

/// Runs candidate texts against both executors and remembers the answers.
pub(crate) struct Checker<'e> {
    src: &'e mut dyn Executor,
    tgt: &'e mut dyn Executor,
    original_error: String,
    cache: HashMap<String, CheckOutcome>,
}

impl<'e> Checker<'e> {
    pub(crate) fn new(src: &'e mut dyn Executor, tgt: &'e mut dyn Executor, original_error: &str) -> Self {
        Checker { src, tgt, original_error: original_error.to_string(), cache: HashMap::new() }
    }

    pub(crate) fn source_name(&self) -> String {
        self.src.name().to_string()
    }

    pub(crate) fn target_name(&self) -> String {
        self.tgt.name().to_string()
    }

    /// Both constraints, for text already known to parse.
    pub(crate) fn check(&mut self, text: &str) -> Result<CheckOutcome, OracleError> {
        if let Some(hit) = self.cache.get(text) {
            return Ok(hit.clone());
        }
        let q = Query::new(text, self.src.name().to_string());
        self.src.reset()?;
        let s = self.src.execute(&q)?;
        let outcome = if !s.is_ok() {
            CheckOutcome::SourceFailed { message: s.error_message.unwrap_or_default() }
        } else {
            self.tgt.reset()?;
            let t = self.tgt.execute(&q)?;
            match t.error_message {
                None if t.is_ok() => CheckOutcome::TargetSucceeded,
                message => {
                    let message = message.unwrap_or_default();
                    let similarity = error_similarity(&message, &self.original_error);
                    if similarity >= SIMILARITY_THRESHOLD {
                        CheckOutcome::Accepted
                    } else {
                        CheckOutcome::DifferentError { message, similarity }
                    }
                }
            }
        };
        self.cache.insert(text.to_string(), outcome.clone());
        Ok(outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    /// Removed subtree paths, in the tree as it was before the attempt.
    pub removed: Vec<String>,
    #[serde(flatten)]
    pub outcome: CheckOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionState {
    #[serde(skip)]
    pub current: TreeNode,
    pub original_error: String,
    pub seed: u64,
    pub initial_tokens: usize,
    pub accepted: usize,
    pub attempts: Vec<Attempt>,
}

impl ReductionState {
    pub fn tokens(&self) -> usize {
        self.current.token_count()
    }

    /// Fraction of tokens removed so far.
    pub fn reduction_rate(&self) -> f64 {
        if self.initial_tokens == 0 {
            return 0.0;
        }
        1.0 - self.tokens() as f64 / self.initial_tokens as f64
    }

    pub fn sql(&self) -> String {
        sql::render(&self.current).expect("reduced trees come from the parser")
    }
}

/// `path` plus the separator (`,`, `AND`, `OR`) between it and its next
/// sibling, or its previous one when it is last in the list. Dropping a
/// list element without its separator never parses.
fn with_separator(tree: &TreeNode, path: &TreePath) -> Vec<TreePath> {
    let mut out = vec![path.clone()];
    let Some((parent, i)) = path.parent() else { return out };
    let Some(siblings) = parent.resolve(tree).map(TreeNode::children) else { return out };
    let is_separator =
        |j: usize| siblings.get(j).is_some_and(|n| n.is_terminal() && matches!(n.text().to_uppercase().as_str(), "," | "AND" | "OR"));
    if is_separator(i) {
        return out;
    }
    if is_separator(i + 1) {
        out.push(parent.child(i + 1));
    } else if i > 0 && is_separator(i - 1) {
        out.push(parent.child(i - 1));
    }
    out
}

/// Random subtree deletion with an explicit record of what was tried.
pub struct RandomReducer<'e> {
    state: ReductionState,
    checker: Checker<'e>,
    rng: ChaCha8Rng,
}

fn render_err(e: impl std::fmt::Display) -> ReduceError {
    ReduceError::Contract(format!("tree does not render: {e}"))
}

impl<'e> RandomReducer<'e> {
    /// Fails if `t` does not currently satisfy both constraints.
    pub fn new(
        t: &TreeNode,
        src: &'e mut dyn Executor,
        tgt: &'e mut dyn Executor,
        original_error: &str,
        seed: u64,
    ) -> Result<Self, ReduceError> {
        let text = sql::render(t).map_err(render_err)?;
        let current = sql::parse(&text).map_err(|d| ReduceError::Contract(format!("rendering does not parse: {d}")))?;
        let mut checker = Checker::new(src, tgt, original_error);
        let outcome = checker.check(&text)?;
        if !outcome.is_accepted() {
            return Err(ReduceError::Contract(format!("the input query {}", outcome.reason())));
        }
        let state = ReductionState {
            initial_tokens: current.token_count(),
            current,
            original_error: original_error.to_string(),
            seed,
            accepted: 0,
            attempts: Vec::new(),
        };
        Ok(RandomReducer { state, checker, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn state(&self) -> &ReductionState {
        &self.state
    }

    /// Removes the subtrees at `paths` together, each with an adjacent
    /// list separator if it has one. Keeps the result if it re-parses to a
    /// smaller tree meeting both constraints; otherwise the working tree is
    /// left as it was. Returns whether it was kept.
    pub fn try_remove(&mut self, paths: &[TreePath]) -> Result<bool, ReduceError> {
        let mut ordered: Vec<TreePath> = paths.iter().flat_map(|p| with_separator(&self.state.current, p)).collect();
        ordered.sort_by(|a, b| b.indices().cmp(a.indices()));
        ordered.dedup();
        let mut cand = self.state.current.clone();
        for p in &ordered {
            cand = remove_at(&cand, p).map_err(|e| ReduceError::Contract(e.to_string()))?;
        }
        let text = sql::render(&cand).map_err(render_err)?;
        let (outcome, reparsed) = match sql::parse(&text) {
            Err(d) => (CheckOutcome::Unparseable { message: d.to_string() }, None),
            Ok(t) if t.token_count() >= self.state.current.token_count() || t.node_count() > self.state.current.node_count() => {
                (CheckOutcome::NotSmaller, None)
            }
            Ok(t) => (self.checker.check(&text)?, Some(t)),
        };
        let kept = outcome.is_accepted();
        if kept {
            self.state.current = reparsed.expect("accepted candidates parsed");
            self.state.accepted += 1;
        }
        self.state.attempts.push(Attempt { removed: paths.iter().map(TreePath::to_string).collect(), outcome });
        Ok(kept)
    }

    /// Runs to a fixpoint: stops once every non-root subtree of the current
    /// tree has been tried alone since the last accepted removal.
    pub fn run(mut self) -> Result<ReductionState, ReduceError> {
        let mut tried: HashSet<TreePath> = HashSet::new();
        loop {
            let untried: Vec<TreePath> =
                subtrees(&self.state.current).into_iter().skip(1).map(|(p, _)| p).filter(|p| !tried.contains(p)).collect();
            if untried.is_empty() {
                return Ok(self.state);
            }
            let batch: Vec<TreePath> = if untried.len() > PAIR_THRESHOLD {
                let picks = sample(&mut self.rng, untried.len(), 2);
                let (a, b) = (&untried[picks.index(0)], &untried[picks.index(1)]);
                if a.is_prefix_of(b) {
                    vec![a.clone()]
                } else if b.is_prefix_of(a) {
                    vec![b.clone()]
                } else {
                    vec![a.clone(), b.clone()]
                }
            } else {
                vec![untried[self.rng.gen_range(0..untried.len())].clone()]
            };
            if self.try_remove(&batch)? {
                tried.clear();
                continue;
            }
            if batch.len() == 1 {
                tried.insert(batch[0].clone());
                continue;
            }
            for p in &batch {
                if self.try_remove(std::slice::from_ref(p))? {
                    tried.clear();
                    break;
                }
                tried.insert(p.clone());
            }
        }
    }
}

/// Random reduction of `t` to a fixpoint. Deterministic for a fixed seed
/// and deterministic executors.
pub fn random_reduce(
    t: &TreeNode,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
    original_error: &str,
    seed: u64,
) -> Result<ReductionState, ReduceError> {
    RandomReducer::new(t, src, tgt, original_error, seed)?.run()
}
