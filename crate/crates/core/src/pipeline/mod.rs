//! The translation loop: check, apply known rules, reduce, translate, mine
//! a rule, store it, apply it, check again.

pub mod config;
pub mod store;

use std::fs;
use std::path::Path;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use config::{open_executor, open_provider, ConfigError, LlmConfig, PipelineConfig};
pub use store::{RuleStore, StoreError};

use crate::llm::{translate_simplified, CompletionProvider, LlmError, TranslateError};
use crate::oracle::{validate, Cause, Executor, OracleError, ValidationVerdict};
use crate::reduce::{llm_reduce, random_reduce, ReduceError};
use crate::rewrite::{apply_rule, apply_rules, RewriteError};
use crate::rule::{mine_rule, validate_rule, Provenance, RuleError};
use crate::sql::{self, ParseDiagnostic, Query};
use crate::tree::TreeNode;

/// Iterations of the loop per query.
pub const MAX_ITERATIONS: usize = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("query does not parse: {0}")]
    Parse(#[from] ParseDiagnostic),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

impl PipelineError {
    /// Whether the failure lies outside the query itself: an unreachable
    /// database or model, or an unwritable rule store.
    pub fn is_infrastructure(&self) -> bool {
        matches!(self, PipelineError::Oracle(OracleError::Infrastructure { .. }) | PipelineError::Llm(_) | PipelineError::Store(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOptions {
    pub seed: u64,
    pub max_iterations: usize,
    /// Creation time written into mined rules. Current time when `None`.
    pub timestamp: Option<String>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { seed: 0, max_iterations: MAX_ITERATIONS, timestamp: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalStatus {
    Translated,
    Unchanged,
    Failed,
}

/// What happened to one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryReport {
    pub query_id: String,
    pub final_status: FinalStatus,
    pub iterations_used: usize,
    pub verdict_history: Vec<ValidationVerdict>,
    pub rules_applied: Vec<String>,
    pub rules_mined: Vec<String>,
    pub output: String,
    /// One line per noteworthy event, in order.
    pub log: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl QueryReport {
    fn new(query_id: &str, text: &str) -> Self {
        QueryReport {
            query_id: query_id.to_string(),
            final_status: FinalStatus::Failed,
            iterations_used: 0,
            verdict_history: Vec::new(),
            rules_applied: Vec::new(),
            rules_mined: Vec::new(),
            output: text.to_string(),
            log: Vec::new(),
            error: None,
        }
    }
}

fn render(tree: &TreeNode) -> String {
    sql::render(tree).expect("rewritten trees contain no pattern symbols")
}

/// Translates one query. Returns the output and its report; the report's
/// status tells whether translation succeeded. Errors are reserved for
/// unparseable input and infrastructure failures.
pub fn translate(
    q_c: &Query,
    store: &mut RuleStore,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
    llm: &dyn CompletionProvider,
    opts: &PipelineOptions,
) -> Result<(Query, QueryReport), PipelineError> {
    translate_named("query", q_c, store, src, tgt, llm, opts)
}

fn check(q_c: &Query, text: &str, src: &mut dyn Executor, tgt: &mut dyn Executor, report: &mut QueryReport) -> Result<bool, PipelineError> {
    let v = validate(q_c, &Query::new(text, tgt.name().to_string()), src, tgt)?;
    let ok = v.is_equivalent();
    report.verdict_history.push(v);
    Ok(ok)
}

fn translate_named(
    query_id: &str,
    q_c: &Query,
    store: &mut RuleStore,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
    llm: &dyn CompletionProvider,
    opts: &PipelineOptions,
) -> Result<(Query, QueryReport), PipelineError> {
    let mut report = QueryReport::new(query_id, &q_c.text);
    let mut tree = sql::parse(&q_c.text)?;
    let target_dialect = tgt.name().to_string();
    let target_query = |text: &str| Query::new(text, target_dialect.clone());

    match check(q_c, &q_c.text, src, tgt, &mut report) {
        Ok(true) => {
            report.final_status = FinalStatus::Unchanged;
            return Ok((q_c.clone(), report));
        }
        Ok(false) => {}
        Err(PipelineError::Oracle(OracleError::SourceFailed { executor, message })) => {
            report.error = Some(format!("the query fails on {executor}: {message}"));
            return Ok((q_c.clone(), report));
        }
        Err(e) => return Err(e),
    }

    let mut current = q_c.text.clone();
    for iteration in 1..=opts.max_iterations.clamp(1, MAX_ITERATIONS) {
        report.iterations_used = iteration;

        // known rules first
        let (rewritten, applied) = apply_rules(&tree, store.rules(), false)?;
        if applied.total() > 0 {
            report.rules_applied.extend(applied.fired());
            tree = rewritten;
            current = render(&tree);
            report.log.push(format!("iteration {iteration}: applied stored rules"));
            if check(q_c, &current, src, tgt, &mut report)? {
                report.final_status = FinalStatus::Translated;
                report.output = current.clone();
                return Ok((target_query(&current), report));
            }
        }

        let verdict = report.verdict_history.last().cloned().expect("at least one verdict");
        let simplified = match simplify(&tree, &current, &verdict, src, tgt, llm, opts.seed) {
            Ok(s) => s,
            Err(why) => {
                report.log.push(format!("iteration {iteration}: {why}"));
                continue;
            }
        };
        report.log.push(format!("iteration {iteration}: reduced to {}", simplified.text));

        let v_s = match validate(&simplified, &simplified, src, tgt) {
            Ok(v) => v,
            Err(OracleError::SourceFailed { message, .. }) => {
                report.log.push(format!("iteration {iteration}: reduced query fails on the source: {message}"));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if v_s.is_equivalent() {
            report.log.push(format!("iteration {iteration}: reduced query shows no dialect difference"));
            continue;
        }
        let translation = match translate_simplified(&simplified, &v_s, llm, src, tgt) {
            Ok(t) => t,
            Err(TranslateError::Failed { attempts, .. }) => {
                report.log.push(format!("iteration {iteration}: no valid translation after {} attempt(s)", attempts.len()));
                continue;
            }
            Err(TranslateError::Oracle(OracleError::SourceFailed { message, .. })) => {
                report.log.push(format!("iteration {iteration}: reduced query fails on the source: {message}"));
                continue;
            }
            Err(TranslateError::Oracle(e)) => return Err(e.into()),
            Err(TranslateError::Llm(e)) => return Err(e.into()),
        };

        let provenance = Provenance {
            simplified_query: simplified.text.clone(),
            translated_query: translation.query.text.clone(),
            created_at: opts.timestamp.clone().unwrap_or_else(|| chrono::Utc::now().to_rfc3339()),
        };
        let s_tree = sql::parse(&simplified.text)?;
        let t_tree = sql::parse(&translation.query.text)?;
        let rule = match mine_rule(&s_tree, &t_tree, provenance, v_s.signature()) {
            Ok(r) => r,
            Err(RuleError::NoDifference) => {
                report.log.push(format!("iteration {iteration}: translation equals the reduced query"));
                continue;
            }
            Err(RuleError::Contract(m)) => {
                report.log.push(format!("iteration {iteration}: rule mining failed: {m}"));
                continue;
            }
        };
        if let Err(vs) = validate_rule(&rule) {
            let vs: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
            report.log.push(format!("iteration {iteration}: mined rule rejected: {}", vs.join("; ")));
            continue;
        }
        let id = rule.id.clone();
        if store.add(rule.clone())? {
            report.rules_mined.push(id.clone());
        }
        let (rewritten, n) = apply_rule(&tree, &rule)?;
        if n == 0 {
            report.log.push(format!("iteration {iteration}: rule {id} does not match the query"));
            continue;
        }
        report.rules_applied.push(id);
        tree = rewritten;
        current = render(&tree);
        if check(q_c, &current, src, tgt, &mut report)? {
            report.final_status = FinalStatus::Translated;
            report.output = current.clone();
            return Ok((target_query(&current), report));
        }
    }
    report.output = current.clone();
    Ok((target_query(&current), report))
}

/// Random reduction followed by LLM reduction. Only execution failures are
/// reduced; for result or state differences there is no error to keep.
fn simplify(
    tree: &TreeNode,
    current: &str,
    verdict: &ValidationVerdict,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
    llm: &dyn CompletionProvider,
    seed: u64,
) -> Result<Query, String> {
    let q = Query::new(current, src.name().to_string());
    if verdict.cause != Some(Cause::ExecutionFailure) {
        return Ok(q);
    }
    let reduced = match random_reduce(tree, src, tgt, verdict.signature(), seed) {
        Ok(st) => Query::new(st.sql(), q.dialect.clone()),
        Err(ReduceError::Contract(m)) => return Err(format!("cannot reduce: {m}")),
        Err(e) => return Err(e.to_string()),
    };
    match llm_reduce(&reduced, verdict.signature(), llm, src, tgt) {
        Ok(r) => Ok(r.query.unwrap_or(reduced)),
        Err(e) => Err(e.to_string()),
    }
}

fn accuracy_as_text<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("n/a"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub queries: Vec<QueryReport>,
    pub total: usize,
    pub translated: usize,
    pub unchanged: usize,
    pub failed: usize,
    /// Translated over total; absent for an empty corpus.
    #[serde(serialize_with = "accuracy_as_text")]
    pub accuracy: Option<f64>,
    pub infrastructure_errors: usize,
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Translates every `*.sql` file in `dir`, in file-name order. Per-query
/// failures, infrastructure ones included, are recorded and the run
/// continues.
pub fn run_corpus(
    dir: &Path,
    store: &mut RuleStore,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
    llm: &dyn CompletionProvider,
    opts: &PipelineOptions,
) -> std::io::Result<CorpusReport> {
    let mut files: Vec<_> =
        fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "sql")).collect();
    files.sort();
    let mut queries = Vec::new();
    let mut infrastructure_errors = 0;
    for path in files {
        let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let text = fs::read_to_string(&path)?;
        let q = Query::new(text.trim(), src.name().to_string());
        let report = match translate_named(&id, &q, store, src, tgt, llm, opts) {
            Ok((_, r)) => r,
            Err(e) => {
                if e.is_infrastructure() {
                    infrastructure_errors += 1;
                }
                let mut r = QueryReport::new(&id, &q.text);
                r.error = Some(e.to_string());
                r
            }
        };
        queries.push(report);
    }
    let count = |s: FinalStatus| queries.iter().filter(|r| r.final_status == s).count();
    let (translated, unchanged, failed) = (count(FinalStatus::Translated), count(FinalStatus::Unchanged), count(FinalStatus::Failed));
    let total = queries.len();
    let accuracy = (total > 0).then(|| translated as f64 / total as f64);
    Ok(CorpusReport { queries, total, translated, unchanged, failed, accuracy, infrastructure_errors })
}
