//! Client for an OpenAI-style chat-completion endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CompletionParams, CompletionProvider, LlmError, Prompt};

pub const API_KEY_ENV: &str = "RISE_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: String,
    #[serde(default = "default_tries")]
    pub max_tries: u32,
    /// Delay before the second try; doubles after that.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
}

fn default_tries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

fn default_timeout_s() -> u64 {
    120
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: api_key.into(),
            max_tries: default_tries(),
            backoff_ms: default_backoff_ms(),
            timeout_s: default_timeout_s(),
        }
    }

    /// Reads the key from `RISE_LLM_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>, model: impl Into<String>) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| LlmError::Config(format!("{API_KEY_ENV} is not set")))?;
        Ok(HttpConfig::new(endpoint, model, key))
    }
}

pub struct HttpProvider {
    config: HttpConfig,
    agent: ureq::Agent,
}

enum Failure {
    Retry(LlmError),
    Fatal(LlmError),
}

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(200).collect();
    if body.chars().count() > 200 {
        s.push_str("...");
    }
    s
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_s)))
            .build()
            .into();
        HttpProvider { config, agent }
    }

    fn try_once(&self, body: &str, n: usize) -> Result<Vec<String>, Failure> {
        let resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| Failure::Retry(LlmError::Transport { status: None, message: e.to_string() }))?;
        let status = resp.status().as_u16();
        let text = resp
            .into_body()
            .read_to_string()
            .map_err(|e| Failure::Retry(LlmError::Transport { status: Some(status), message: e.to_string() }))?;
        if !(200..300).contains(&status) {
            let err = LlmError::Transport { status: Some(status), message: excerpt(&text) };
            return Err(if status == 429 || status >= 500 { Failure::Retry(err) } else { Failure::Fatal(err) });
        }
        let fatal = |message: String| Failure::Fatal(LlmError::Transport { status: Some(status), message });
        let value: Value = serde_json::from_str(&text).map_err(|e| fatal(format!("bad response body: {e}")))?;
        let texts: Vec<String> = value["choices"]
            .as_array()
            .map(|cs| cs.iter().filter_map(|c| c["message"]["content"].as_str().map(str::to_string)).collect())
            .unwrap_or_default();
        if texts.is_empty() {
            return Err(fatal(format!("response has no choices: {}", excerpt(&text))));
        }
        Ok(texts.into_iter().take(n).collect())
    }
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, prompt: &Prompt, params: &CompletionParams) -> Result<Vec<String>, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": params.n,
        })
        .to_string();
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = None;
        for attempt in 1..=self.config.max_tries.max(1) {
            if attempt > 1 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.try_once(&body, params.n) {
                Ok(texts) => return Ok(texts),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(e)) => last = Some(e),
            }
        }
        Err(last.expect("at least one try"))
    }
}
