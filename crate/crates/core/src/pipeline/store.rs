use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::rule::{rule_from_file, rule_to_file, validate_rule, TranslationRule, Violation};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: crate::rule::RuleFileError },
    #[error("rule {id} is invalid: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { id: String, violations: Vec<Violation> },
    #[error("{path}: duplicate rule id {id}")]
    Duplicate { path: PathBuf, id: String },
}

/// Ordered, deduplicated rules, optionally backed by a directory of
/// `NNNN_<id>.json` files. Load order is file-name order.
#[derive(Debug, Clone, Default)]
pub struct RuleStore {
    dir: Option<PathBuf>,
    rules: Vec<TranslationRule>,
    ids: HashSet<String>,
}

impl RuleStore {
    pub fn in_memory() -> Self {
        RuleStore::default()
    }

    /// Opens `dir`, creating it if needed.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let io = |path: &Path, e: std::io::Error| StoreError::Io { path: path.to_path_buf(), message: e.to_string() };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut store = RuleStore { dir: Some(dir.to_path_buf()), ..Default::default() };
        for path in files {
            let bytes = fs::read(&path).map_err(|e| io(&path, e))?;
            let rule = rule_from_file(&bytes).map_err(|source| StoreError::File { path: path.clone(), source })?;
            validate_rule(&rule).map_err(|violations| StoreError::Invalid { id: rule.id.clone(), violations })?;
            if !store.ids.insert(rule.id.clone()) {
                return Err(StoreError::Duplicate { path, id: rule.id });
            }
            store.rules.push(rule);
        }
        Ok(store)
    }

    pub fn rules(&self) -> &[TranslationRule] {
        &self.rules
    }

    pub fn get(&self, id: &str) -> Option<&TranslationRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Appends a valid rule. Returns false, changing nothing, if a rule with
    /// the same id is already stored.
    pub fn add(&mut self, rule: TranslationRule) -> Result<bool, StoreError> {
        validate_rule(&rule).map_err(|violations| StoreError::Invalid { id: rule.id.clone(), violations })?;
        if self.ids.contains(&rule.id) {
            return Ok(false);
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{:04}_{}.json", self.rules.len() + 1, rule.id));
            fs::write(&path, rule_to_file(&rule)).map_err(|e| StoreError::Io { path, message: e.to_string() })?;
        }
        self.ids.insert(rule.id.clone());
        self.rules.push(rule);
        Ok(true)
    }
}
