//! JSON configuration and construction of executors and providers from it.
//!
//! ```json
//! {
//!   "source_executor": "fixtures/postgresql",
//!   "target_executor": "fixtures/mysql",
//!   "llm": {"mode": "replay", "fixtures": "fixtures/llm", "strict": true},
//!   "rules_dir": "rules",
//!   "seed": 7,
//!   "max_iterations": 3
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MAX_ITERATIONS;
use crate::llm::{CompletionProvider, HttpConfig, HttpProvider, LlmError, ReplayProvider};
use crate::oracle::{Executor, OracleError, ScriptedExecutor};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LlmConfig {
    /// No model: every request gets an empty answer.
    #[default]
    None,
    Replay {
        fixtures: PathBuf,
        #[serde(default)]
        strict: bool,
    },
    Live {
        endpoint: String,
        model: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub source_executor: Option<String>,
    #[serde(default)]
    pub target_executor: Option<String>,
    #[serde(default)]
    pub llm: LlmConfig,
    #[serde(default)]
    pub rules_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
}

fn default_iterations() -> usize {
    MAX_ITERATIONS
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source_executor: None,
            target_executor: None,
            llm: LlmConfig::None,
            rules_dir: None,
            seed: 0,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

fn is_dsn(spec: &str) -> bool {
    spec.contains("://")
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let invalid = |message: String| ConfigError::Invalid { path: path.display().to_string(), message };
        let text = fs::read_to_string(path).map_err(|e| invalid(e.to_string()))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        cfg.check().map_err(invalid)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        for spec in [&mut cfg.source_executor, &mut cfg.target_executor].into_iter().flatten() {
            if !is_dsn(spec) {
                *spec = resolve(Path::new(spec.as_str())).display().to_string();
            }
        }
        if let Some(d) = &cfg.rules_dir {
            cfg.rules_dir = Some(resolve(d));
        }
        if let LlmConfig::Replay { fixtures, .. } = &mut cfg.llm {
            *fixtures = resolve(fixtures);
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), String> {
        if !(1..=MAX_ITERATIONS).contains(&self.max_iterations) {
            return Err(format!("max_iterations must be between 1 and {MAX_ITERATIONS}"));
        }
        Ok(())
    }
}

/// Opens an executor from a spec: a scripted fixture directory, whose
/// final path component names the database, or a DSN. No live database
/// adapter is built in, so a DSN yields an infrastructure error.
pub fn open_executor(spec: &str) -> Result<Box<dyn Executor>, ConfigError> {
    if is_dsn(spec) {
        return Err(OracleError::Infrastructure {
            executor: spec.to_string(),
            message: "no live database adapter is available; use a scripted fixture directory".into(),
        }
        .into());
    }
    let path = Path::new(spec);
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
    let exec = ScriptedExecutor::from_dir(name, path)
        .map_err(|e| ConfigError::Invalid { path: e.path.display().to_string(), message: e.message })?;
    Ok(Box::new(exec))
}

pub fn open_provider(cfg: &LlmConfig) -> Result<Box<dyn CompletionProvider>, ConfigError> {
    Ok(match cfg {
        LlmConfig::None => Box::new(ReplayProvider::default()),
        LlmConfig::Replay { fixtures, strict } => Box::new(ReplayProvider::from_dir(fixtures, *strict)?),
        LlmConfig::Live { endpoint, model } => Box::new(HttpProvider::new(HttpConfig::from_env(endpoint, model)?)),
    })
}
