//! Offline providers: replay from fixtures, and a recorder around any
//! provider.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{replay_key, CompletionParams, CompletionProvider, LlmError, Prompt};

/// One fixture entry. Either `key` is given, or `template` and `slots`
/// from which the key is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<BTreeMap<String, String>>,
    pub candidates: Vec<String>,
}

impl ReplayEntry {
    pub fn for_prompt(prompt: &Prompt, candidates: Vec<String>) -> Self {
        ReplayEntry { key: Some(prompt.key()), template: Some(prompt.template_id.clone()), slots: Some(prompt.slots.clone()), candidates }
    }

    fn resolved_key(&self) -> Result<String, String> {
        match (&self.key, &self.template, &self.slots) {
            (Some(k), _, _) => Ok(k.clone()),
            (None, Some(t), Some(s)) => Ok(replay_key(t, s)),
            _ => Err("entry needs `key`, or `template` and `slots`".into()),
        }
    }
}

/// Serves canned completions. Never touches the network.
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    entries: HashMap<String, Vec<String>>,
    /// A miss is an error when strict, and an empty answer otherwise.
    pub strict: bool,
}

impl ReplayProvider {
    pub fn new(entries: Vec<ReplayEntry>, strict: bool) -> Result<Self, LlmError> {
        let mut p = ReplayProvider { entries: HashMap::new(), strict };
        for e in entries {
            p.insert("<memory>", e)?;
        }
        Ok(p)
    }

    fn insert(&mut self, origin: &str, e: ReplayEntry) -> Result<(), LlmError> {
        let bad = |message: String| LlmError::Fixture { path: origin.to_string(), message };
        let key = e.resolved_key().map_err(bad)?;
        if self.entries.insert(key.clone(), e.candidates).is_some() {
            return Err(bad(format!("duplicate key {key}")));
        }
        Ok(())
    }

    /// Loads every `*.json` file in `dir`, in file-name order. A file holds
    /// one entry or an array of entries.
    pub fn from_dir(dir: &Path, strict: bool) -> Result<Self, LlmError> {
        let mut p = ReplayProvider { entries: HashMap::new(), strict };
        let read_err = |message: String| LlmError::Fixture { path: dir.display().to_string(), message };
        let mut files: Vec<_> = fs::read_dir(dir)
            .map_err(|e| read_err(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let origin = path.display().to_string();
            let bad = |message: String| LlmError::Fixture { path: origin.clone(), message };
            let text = fs::read_to_string(&path).map_err(|e| bad(e.to_string()))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let entries: Vec<ReplayEntry> = if value.is_array() {
                serde_json::from_value(value).map_err(|e| bad(e.to_string()))?
            } else {
                vec![serde_json::from_value(value).map_err(|e| bad(e.to_string()))?]
            };
            for e in entries {
                p.insert(&origin, e)?;
            }
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl CompletionProvider for ReplayProvider {
    /// Returns the first `n` stored candidates, or all of them if fewer.
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError> {
        let key = prompt.key();
        match self.entries.get(&key) {
            Some(c) => Ok(c.iter().take(params.n).cloned().collect()),
            None if self.strict => Err(LlmError::ReplayMiss { template_id: prompt.template_id.clone(), key }),
            None => Ok(Vec::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordedCall {
    pub template_id: String,
    pub key: String,
    pub slots: BTreeMap<String, String>,
    pub params: CompletionParams,
    pub responses: Vec<String>,
}

/// Passes calls through and keeps a log of them.
#[derive(Debug, Default)]
pub struct RecordingProvider<P> {
    inner: P,
    calls: Mutex<Vec<RecordedCall>>,
}

impl<P: CompletionProvider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        RecordingProvider { inner, calls: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> Vec<RecordedCall> {
        self.calls.lock().expect("recorder lock").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("recorder lock").len()
    }

    pub fn clear(&self) {
        self.calls.lock().expect("recorder lock").clear();
    }

    /// The log as replay fixtures. Later calls with the same key win.
    pub fn to_fixtures(&self) -> Vec<ReplayEntry> {
        let mut by_key: BTreeMap<String, ReplayEntry> = BTreeMap::new();
        for c in self.calls() {
            let e = ReplayEntry { key: Some(c.key.clone()), template: Some(c.template_id), slots: Some(c.slots), candidates: c.responses };
            by_key.insert(c.key, e);
        }
        by_key.into_values().collect()
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: CompletionProvider> CompletionProvider for RecordingProvider<P> {
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError> {
        let out = self.inner.complete(prompt, params);
        self.calls.lock().expect("recorder lock").push(RecordedCall {
            template_id: prompt.template_id.clone(),
            key: prompt.key(),
            slots: prompt.slots.clone(),
            params: *params,
            responses: out.as_ref().cloned().unwrap_or_default(),
        });
        out
    }
}
