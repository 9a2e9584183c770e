//! Execution oracle: runs queries on a source and a target executor and
//! decides whether the candidate behaves like the source.

pub mod digest;
pub mod scripted;
pub mod similarity;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::{self, Query};
use crate::tree::TreeNode;

pub use digest::state_digest;
pub use scripted::ScriptedExecutor;
pub use similarity::error_similarity;

/// Similarity an error message needs to count as the same error.
pub const SIMILARITY_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    SyntaxError,
    RuntimeError,
}

/// One result cell. Deserializes from plain JSON scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Null => f.write_str("NULL"),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Text(s) => write!(f, "{s:?}"),
        }
    }
}

pub type Row = Vec<Cell>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Row>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
    pub state_digest: String,
}

impl ExecutionOutcome {
    pub fn ok(rows: Option<Vec<Row>>, state_digest: impl Into<String>) -> Self {
        ExecutionOutcome { status: Status::Ok, rows, error_message: None, state_digest: state_digest.into() }
    }

    pub fn failed(status: Status, message: impl Into<String>, state_digest: impl Into<String>) -> Self {
        assert_ne!(status, Status::Ok, "a failed outcome needs an error status");
        ExecutionOutcome { status, rows: None, error_message: Some(message.into()), state_digest: state_digest.into() }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    /// The executor itself could not be reached or misbehaved.
    #[error("executor {executor}: {message}")]
    Infrastructure { executor: String, message: String },
    /// The reference query does not run on the source executor, so there
    /// is nothing to compare against.
    #[error("source query failed on {executor}: {message}")]
    SourceFailed { executor: String, message: String },
}

/// A database the oracle can run queries against.
pub trait Executor {
    fn name(&self) -> &str;
    fn execute(&mut self, query: &Query) -> Result<ExecutionOutcome, OracleError>;
    /// Restores the initial database state.
    fn reset(&mut self) -> Result<(), OracleError>;
}

impl<E: Executor + ?Sized> Executor for &mut E {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn execute(&mut self, query: &Query) -> Result<ExecutionOutcome, OracleError> {
        (**self).execute(query)
    }
    fn reset(&mut self) -> Result<(), OracleError> {
        (**self).reset()
    }
}

impl<E: Executor + ?Sized> Executor for Box<E> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn execute(&mut self, query: &Query) -> Result<ExecutionOutcome, OracleError> {
        (**self).execute(query)
    }
    fn reset(&mut self) -> Result<(), OracleError> {
        (**self).reset()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Equivalent,
    DialectDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    ExecutionFailure,
    ResultMismatch,
    StateMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub kind: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_signature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<Cause>,
}

impl ValidationVerdict {
    pub fn equivalent() -> Self {
        ValidationVerdict { kind: VerdictKind::Equivalent, error_signature: None, cause: None }
    }

    pub fn detected(cause: Cause, signature: impl Into<String>) -> Self {
        let mut signature = signature.into();
        if signature.trim().is_empty() {
            signature = format!("{cause:?}");
        }
        ValidationVerdict { kind: VerdictKind::DialectDetected, error_signature: Some(signature), cause: Some(cause) }
    }

    pub fn is_equivalent(&self) -> bool {
        self.kind == VerdictKind::Equivalent
    }

    pub fn signature(&self) -> &str {
        self.error_signature.as_deref().unwrap_or("")
    }
}

/// Runs `source_q` on `src` and `candidate_q` on `tgt`, each from a fresh
/// state, and checks the three conditions in order: the candidate runs, its
/// rows match, and the resulting database states match.
pub fn validate(
    source_q: &Query,
    candidate_q: &Query,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
) -> Result<ValidationVerdict, OracleError> {
    src.reset()?;
    let expected = src.execute(source_q)?;
    if !expected.is_ok() {
        return Err(OracleError::SourceFailed { executor: src.name().to_string(), message: expected.error_message.unwrap_or_default() });
    }
    tgt.reset()?;
    let actual = tgt.execute(candidate_q)?;
    if !actual.is_ok() {
        return Ok(ValidationVerdict::detected(Cause::ExecutionFailure, actual.error_message.unwrap_or_default()));
    }
    let ordered = sql::parse(&source_q.text).map(|t| has_top_level_order_by(&t)).unwrap_or(false);
    let want = expected.rows.unwrap_or_default();
    let got = actual.rows.unwrap_or_default();
    if !rows_match(&want, &got, ordered) {
        return Ok(ValidationVerdict::detected(Cause::ResultMismatch, describe_row_diff(&want, &got, ordered)));
    }
    if expected.state_digest != actual.state_digest {
        return Ok(ValidationVerdict::detected(
            Cause::StateMismatch,
            format!("database state differs after execution: {} vs {}", expected.state_digest, actual.state_digest),
        ));
    }
    Ok(ValidationVerdict::equivalent())
}

/// True when the first statement's outermost select carries ORDER BY.
pub fn has_top_level_order_by(tree: &TreeNode) -> bool {
    let stmt = if tree.kind() == "select_stmt" { Some(tree) } else { tree.children().iter().find(|c| !c.is_terminal()) };
    stmt.is_some_and(|s| s.kind() == "select_stmt" && s.children().iter().any(|c| c.kind() == "order_clause"))
}

fn row_key(row: &Row) -> String {
    serde_json::to_string(row).expect("cells serialize")
}

/// Rows compare in order when `ordered`, otherwise as multisets. NULL
/// equals NULL.
pub fn rows_match(a: &[Row], b: &[Row], ordered: bool) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if ordered {
        return a.iter().zip(b).all(|(x, y)| row_key(x) == row_key(y));
    }
    let mut counts: HashMap<String, i64> = HashMap::new();
    for row in a {
        *counts.entry(row_key(row)).or_default() += 1;
    }
    for row in b {
        *counts.entry(row_key(row)).or_default() -= 1;
    }
    counts.values().all(|&c| c == 0)
}

fn describe_row_diff(want: &[Row], got: &[Row], ordered: bool) -> String {
    let show = |rows: &[Row]| {
        let shown: Vec<String> =
            rows.iter().take(5).map(|r| format!("({})", r.iter().map(Cell::to_string).collect::<Vec<_>>().join(", "))).collect();
        let more = if rows.len() > 5 { format!(" and {} more", rows.len() - 5) } else { String::new() };
        format!("{} row(s) [{}]{more}", rows.len(), shown.join(", "))
    };
    let how = if ordered { "ordered" } else { "unordered" };
    format!("query results differ ({how}): expected {}, got {}", show(want), show(got))
}
