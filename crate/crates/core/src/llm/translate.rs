//! Translating a reduced query with the LLM: execution feedback, a summary
//! of the dialect features involved, then translation attempts checked by
//! the oracle.

use serde::Serialize;
use thiserror::Error;

use super::prompts::{summary_prompt, translate_prompt};
use super::{extract_sql, CompletionProvider, LlmError, SUMMARY_PARAMS, TRANSLATE_PARAMS};
use crate::oracle::{validate, Executor, OracleError, ValidationVerdict};
use crate::sql::{self, Query};

pub const MAX_TRANSLATION_ITERATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationAttempt {
    pub iteration: usize,
    pub feedback: String,
    pub feature_summary: String,
    /// The extracted SQL, if the provider answered at all.
    pub translation: Option<String>,
    /// Why the candidate was turned down. `None` when it was accepted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<ValidationVerdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub query: Query,
    pub attempts: Vec<TranslationAttempt>,
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("no translation passed validation after {} attempt(s)", attempts.len())]
    Failed { last_verdict: Option<ValidationVerdict>, attempts: Vec<TranslationAttempt> },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Execution feedback for the prompts, taken from the verdict.
pub fn feedback_text(verdict: &ValidationVerdict) -> String {
    match verdict.cause {
        Some(cause) => format!("{}: {}", serde_json::to_value(cause).expect("cause").as_str().unwrap_or(""), verdict.signature()),
        None => "no difference observed".to_string(),
    }
}

/// Asks for a translation of `q_s` until one validates as equivalent, at
/// most [`MAX_TRANSLATION_ITERATIONS`] times. The feature summary is
/// requested once, at temperature 0.
pub fn translate_simplified(
    q_s: &Query,
    verdict: &ValidationVerdict,
    llm: &dyn CompletionProvider,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
) -> Result<Translation, TranslateError> {
    let source_db = src.name().to_string();
    let target_db = tgt.name().to_string();
    let feedback = feedback_text(verdict);
    let summary =
        llm.complete(&summary_prompt(q_s, &source_db, &target_db, &feedback), &SUMMARY_PARAMS)?.into_iter().next().unwrap_or_default();

    let mut attempts = Vec::new();
    let mut rejected: Vec<String> = Vec::new();
    let mut last_verdict = None;
    for iteration in 1..=MAX_TRANSLATION_ITERATIONS {
        let prompt = translate_prompt(q_s, &source_db, &target_db, &feedback, &summary, &rejected);
        let answer = llm.complete(&prompt, &TRANSLATE_PARAMS)?.into_iter().next();
        let mut attempt = TranslationAttempt {
            iteration,
            feedback: feedback.clone(),
            feature_summary: summary.clone(),
            translation: None,
            rejection: None,
            verdict: None,
        };
        let Some(answer) = answer else {
            attempt.rejection = Some("no answer".into());
            attempts.push(attempt);
            continue;
        };
        let candidate = extract_sql(&answer);
        attempt.translation = Some(candidate.clone());
        if let Err(d) = sql::parse(&candidate) {
            let why = format!("does not parse: {d}");
            rejected.push(format!("{candidate} -- {why}"));
            attempt.rejection = Some(why);
            attempts.push(attempt);
            continue;
        }
        let q_t = Query::new(candidate.clone(), target_db.clone());
        let v = validate(q_s, &q_t, src, tgt)?;
        attempt.verdict = Some(v.clone());
        if v.is_equivalent() {
            attempts.push(attempt);
            return Ok(Translation { query: q_t, attempts });
        }
        let why = feedback_text(&v);
        rejected.push(format!("{candidate} -- {why}"));
        attempt.rejection = Some(why);
        attempts.push(attempt);
        last_verdict = Some(v);
    }
    Err(TranslateError::Failed { last_verdict, attempts })
}
