//! Executor that answers from JSON fixtures instead of a live database.
//!
//! A fixture directory holds `*.json` files, read in file-name order. Each
//! file is one entry, an array of entries, or an object
//! `{"initial_state": {table: rows}, "entries": [...]}`. An entry:
//!
//! ```json
//! {"match": {"substring": "FULL OUTER JOIN"},
//!  "status": "syntax-error",
//!  "error_message": "ERROR 1064 (42000): ..."}
//! ```
//!
//! `match` is one of `exact`, `substring` or `regex`, tested against the
//! normalized query (tokens joined by single spaces, uppercased). Exact
//! entries win over the others; among the rest the first hit in load order
//! wins, so an empty `substring` acts as a default. An `ok` entry may carry
//! `rows`, and either `state` (tables the query leaves behind) or an opaque
//! `state_digest`; without either the state is left unchanged.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{state_digest, ExecutionOutcome, Executor, OracleError, Row, Status};
use crate::sql::{self, Query};

#[derive(Debug, Error)]
#[error("fixture {path}: {message}")]
pub struct FixtureError {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Exact(String),
    Substring(String),
    Regex(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match")]
    pub matcher: Matcher,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Row>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<BTreeMap<String, Vec<Row>>>,
}

impl ScriptEntry {
    pub fn new(matcher: Matcher, outcome: ExecutionOutcome) -> Self {
        ScriptEntry {
            matcher,
            status: outcome.status,
            rows: outcome.rows,
            error_message: outcome.error_message,
            state_digest: Some(outcome.state_digest),
            state: None,
        }
    }

    fn check(&self) -> Result<(), String> {
        match (self.status, &self.error_message) {
            (Status::Ok, Some(_)) => Err("an ok entry cannot carry error_message".into()),
            (Status::Ok, None) => Ok(()),
            (_, None) => Err("a failing entry needs error_message".into()),
            (_, Some(_)) if self.rows.is_some() => Err("a failing entry cannot carry rows".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    Many(Vec<ScriptEntry>),
    WithState { initial_state: BTreeMap<String, Vec<Row>>, entries: Vec<ScriptEntry> },
    One(Box<ScriptEntry>),
}

#[derive(Debug, Clone)]
enum Compiled {
    Exact(String),
    Substring(String),
    Regex(Regex),
}

#[derive(Debug, Clone)]
pub struct ScriptedExecutor {
    name: String,
    entries: Vec<(Compiled, ScriptEntry)>,
    initial_digest: String,
    current_digest: String,
}

fn compile(matcher: &Matcher) -> Result<Compiled, regex::Error> {
    Ok(match matcher {
        Matcher::Exact(s) => Compiled::Exact(sql::normalize(s)),
        Matcher::Substring(s) if s.trim().is_empty() => Compiled::Substring(String::new()),
        Matcher::Substring(s) => Compiled::Substring(sql::normalize(s)),
        Matcher::Regex(r) => Compiled::Regex(Regex::new(r)?),
    })
}

impl ScriptedExecutor {
    /// Panics on an invalid regex; use [`ScriptedExecutor::try_new`] for
    /// untrusted entries.
    pub fn new(name: impl Into<String>, entries: Vec<ScriptEntry>) -> Self {
        Self::try_new(name, BTreeMap::new(), entries).expect("valid script entries")
    }

    pub fn try_new(name: impl Into<String>, initial_state: BTreeMap<String, Vec<Row>>, entries: Vec<ScriptEntry>) -> Result<Self, String> {
        let mut compiled = Vec::with_capacity(entries.len());
        for (i, e) in entries.into_iter().enumerate() {
            e.check().map_err(|m| format!("entry {i}: {m}"))?;
            let c = compile(&e.matcher).map_err(|err| format!("entry {i}: bad regex: {err}"))?;
            compiled.push((c, e));
        }
        let digest = state_digest(&initial_state);
        Ok(ScriptedExecutor { name: name.into(), entries: compiled, initial_digest: digest.clone(), current_digest: digest })
    }

    /// Loads every `*.json` file under `dir` in file-name order.
    pub fn from_dir(name: impl Into<String>, dir: &Path) -> Result<Self, FixtureError> {
        let err = |path: &Path, message: String| FixtureError { path: path.to_path_buf(), message };
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| err(dir, e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut entries = Vec::new();
        let mut initial_state = BTreeMap::new();
        for file in &files {
            let text = fs::read_to_string(file).map_err(|e| err(file, e.to_string()))?;
            match serde_json::from_str::<FixtureFile>(&text).map_err(|e| err(file, e.to_string()))? {
                FixtureFile::One(e) => entries.push(*e),
                FixtureFile::Many(es) => entries.extend(es),
                FixtureFile::WithState { initial_state: s, entries: es } => {
                    initial_state.extend(s);
                    entries.extend(es);
                }
            }
        }
        Self::try_new(name, initial_state, entries).map_err(|m| err(dir, m))
    }

    fn lookup(&self, key: &str) -> Option<&ScriptEntry> {
        let exact = self.entries.iter().find(|(c, _)| matches!(c, Compiled::Exact(k) if k == key));
        exact
            .or_else(|| {
                self.entries.iter().find(|(c, _)| match c {
                    Compiled::Exact(_) => false,
                    Compiled::Substring(s) => key.contains(s.as_str()),
                    Compiled::Regex(r) => r.is_match(key),
                })
            })
            .map(|(_, e)| e)
    }
}

impl Executor for ScriptedExecutor {
    fn name(&self) -> &str {
        &self.name
    }

    fn execute(&mut self, query: &Query) -> Result<ExecutionOutcome, OracleError> {
        let key = sql::normalize(&query.text);
        let Some(entry) = self.lookup(&key).cloned() else {
            return Ok(ExecutionOutcome::failed(
                Status::RuntimeError,
                format!("no scripted outcome for query: {key}"),
                self.current_digest.clone(),
            ));
        };
        if entry.status != Status::Ok {
            let message = entry.error_message.unwrap_or_default();
            return Ok(ExecutionOutcome::failed(entry.status, message, self.current_digest.clone()));
        }
        if let Some(state) = &entry.state {
            self.current_digest = state_digest(state);
        } else if let Some(d) = entry.state_digest {
            self.current_digest = d;
        }
        Ok(ExecutionOutcome::ok(entry.rows, self.current_digest.clone()))
    }

    fn reset(&mut self) -> Result<(), OracleError> {
        self.current_digest = self.initial_digest.clone();
        Ok(())
    }
}
