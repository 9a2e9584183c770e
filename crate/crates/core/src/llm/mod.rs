//! Completion providers and the prompts sent to them.

pub mod http;
pub mod prompts;
pub mod replay;
pub mod translate;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::{HttpConfig, HttpProvider, API_KEY_ENV};
pub use replay::{RecordedCall, RecordingProvider, ReplayEntry, ReplayProvider};
pub use translate::{translate_simplified, TranslateError, Translation, TranslationAttempt, MAX_TRANSLATION_ITERATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
    /// Number of candidates requested.
    pub n: usize,
}

/// Five candidates per reduction request.
pub const REDUCTION_PARAMS: CompletionParams = CompletionParams { temperature: 0.7, max_tokens: 2048, n: 5 };
pub const SUMMARY_PARAMS: CompletionParams = CompletionParams { temperature: 0.0, max_tokens: 2048, n: 1 };
pub const TRANSLATE_PARAMS: CompletionParams = CompletionParams { temperature: 0.7, max_tokens: 2048, n: 1 };

/// A rendered template together with what went into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub template_id: String,
    pub slots: BTreeMap<String, String>,
    pub text: String,
}

impl Prompt {
    /// Free-form prompt with no template.
    pub fn raw(text: impl Into<String>) -> Self {
        let text = text.into();
        let slots = BTreeMap::from([("text".to_string(), text.clone())]);
        Prompt { template_id: "raw".into(), slots, text }
    }

    pub fn key(&self) -> String {
        replay_key(&self.template_id, &self.slots)
    }
}

/// Stable fixture key: SHA-256 over the template id and the slot values
/// with whitespace runs collapsed. First 16 hex digits.
pub fn replay_key(template_id: &str, slots: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    h.update(template_id);
    for (name, value) in slots {
        let value: Vec<&str> = value.split_whitespace().collect();
        h.update(format!("\0{name}={}", value.join(" ")));
    }
    hex::encode(h.finalize())[..16].to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("no replay fixture for {template_id} prompt with key {key}")]
    ReplayMiss { template_id: String, key: String },
    #[error("replay fixture {path}: {message}")]
    Fixture { path: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
}

/// Something that turns a prompt into candidate completions.
pub trait CompletionProvider: Send + Sync {
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError>;
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for &P {
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError> {
        (**self).complete(prompt, params)
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Box<P> {
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError> {
        (**self).complete(prompt, params)
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Arc<P> {
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError> {
        (**self).complete(prompt, params)
    }
}

/// The SQL in a completion: the first ```sql fenced block, else the whole
/// text trimmed.
pub fn extract_sql(completion: &str) -> String {
    static FENCE: OnceLock<Regex> = OnceLock::new();
    let re = FENCE.get_or_init(|| Regex::new(r"(?is)```\s*sql\b(.*?)```").expect("valid regex"));
    match re.captures(completion) {
        Some(c) => c[1].trim().to_string(),
        None => completion.trim().to_string(),
    }
}
