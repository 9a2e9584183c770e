use serde::Serialize;

use super::{CheckOutcome, Checker, ReduceError};
use crate::llm::prompts::reduction_prompt_with_rejected;
use crate::llm::{extract_sql, CompletionProvider, REDUCTION_PARAMS};
use crate::oracle::Executor;
use crate::sql::{self, Query};

pub const LLM_REDUCTION_ITERATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmReduction {
    /// The shortest accepted candidate, if any.
    pub query: Option<Query>,
    pub iterations: usize,
    /// Candidates turned down, with the reason.
    pub rejected: Vec<(String, String)>,
}

/// Asks for shorter reproducers of `original_error`, five per request, for
/// up to five requests. Stops at the first request that yields an
/// acceptable candidate and keeps the shortest one by token count. A
/// candidate must parse, be shorter than `q`, run on `src`, and fail on
/// `tgt` with a similar error.
pub fn llm_reduce(
    q: &Query,
    original_error: &str,
    llm: &dyn CompletionProvider,
    src: &mut dyn Executor,
    tgt: &mut dyn Executor,
) -> Result<LlmReduction, ReduceError> {
    let base = sql::parse(&q.text).map_err(|d| ReduceError::Contract(format!("query does not parse: {d}")))?;
    let limit = base.token_count();
    let mut checker = Checker::new(src, tgt, original_error);
    let (source_db, target_db) = (checker.source_name(), checker.target_name());
    let mut out = LlmReduction { query: None, iterations: 0, rejected: Vec::new() };
    for iteration in 1..=LLM_REDUCTION_ITERATIONS {
        out.iterations = iteration;
        let notes: Vec<String> = out.rejected.iter().map(|(c, why)| format!("{c} -- {why}")).collect();
        let prompt = reduction_prompt_with_rejected(q, &source_db, &target_db, original_error, &notes);
        let mut best: Option<(usize, String)> = None;
        for answer in llm.complete(&prompt, &REDUCTION_PARAMS)? {
            let cand = extract_sql(&answer);
            let outcome = match sql::parse(&cand) {
                Err(d) => CheckOutcome::Unparseable { message: d.to_string() },
                Ok(t) if t.token_count() >= limit => CheckOutcome::NotSmaller,
                Ok(t) => match checker.check(&cand)? {
                    CheckOutcome::Accepted => {
                        let n = t.token_count();
                        if best.as_ref().is_none_or(|(m, _)| n < *m) {
                            best = Some((n, cand.clone()));
                        }
                        continue;
                    }
                    other => other,
                },
            };
            out.rejected.push((cand, outcome.reason()));
        }
        if let Some((_, text)) = best {
            out.query = Some(Query::new(text, q.dialect.clone()));
            return Ok(out);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompts::reduction_prompt;
    use crate::llm::{RecordingProvider, ReplayEntry, ReplayProvider};
    use crate::oracle::scripted::{Matcher, ScriptEntry};
    use crate::oracle::{ExecutionOutcome, ScriptedExecutor, Status};

    const ERR: &str = "syntax error near 'FULL OUTER JOIN b' at line 1";

    fn executors() -> (ScriptedExecutor, ScriptedExecutor) {
        let src = ScriptedExecutor::new(
            "postgresql",
            vec![
                ScriptEntry::new(
                    Matcher::Substring("MISSING".into()),
                    ExecutionOutcome::failed(Status::RuntimeError, "relation missing does not exist", "s"),
                ),
                ScriptEntry::new(Matcher::Substring(String::new()), ExecutionOutcome::ok(None, "s")),
            ],
        );
        let tgt = ScriptedExecutor::new(
            "mysql",
            vec![
                ScriptEntry::new(Matcher::Substring("FULL OUTER JOIN".into()), ExecutionOutcome::failed(Status::SyntaxError, ERR, "s")),
                ScriptEntry::new(
                    Matcher::Substring(String::new()),
                    ExecutionOutcome::failed(Status::RuntimeError, "Unknown column 'q' in 'field list'", "s"),
                ),
            ],
        );
        (src, tgt)
    }

    fn q() -> Query {
        Query::new("SELECT a.x, b.y FROM a FULL OUTER JOIN b ON a.x = b.x WHERE a.z > 1", "postgresql")
    }

    fn provider(answers: &[&str]) -> ReplayProvider {
        let p = reduction_prompt(&q(), "postgresql", "mysql", ERR);
        ReplayProvider::new(vec![ReplayEntry::for_prompt(&p, answers.iter().map(|s| s.to_string()).collect())], false).unwrap()
    }

    #[test]
    fn shortest_valid_candidate_wins() {
        let (mut src, mut tgt) = executors();
        let llm = provider(&[
            "```sql\nSELECT a.x FROM a FULL OUTER JOIN b ON a.x = b.x\n```",
            "```sql\nSELECT * FROM a FULL OUTER JOIN b ON c\n```",
        ]);
        let r = llm_reduce(&q(), ERR, &llm, &mut src, &mut tgt).unwrap();
        assert_eq!(r.query.unwrap().text, "SELECT * FROM a FULL OUTER JOIN b ON c");
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn low_similarity_everywhere_is_no_improvement() {
        let (mut src, mut tgt) = executors();
        let llm = RecordingProvider::new(provider(&["SELECT q FROM a"]));
        let r = llm_reduce(&q(), ERR, &llm, &mut src, &mut tgt).unwrap();
        assert_eq!(r.query, None);
        assert_eq!(r.iterations, LLM_REDUCTION_ITERATIONS);
        assert_eq!(llm.call_count(), LLM_REDUCTION_ITERATIONS);
        assert!(llm.calls().iter().all(|c| c.params.n == 5 && c.params.temperature == 0.7));
        assert!(r.rejected[0].1.starts_with("different error"));
    }

    #[test]
    fn candidate_failing_on_source_is_skipped() {
        let (mut src, mut tgt) = executors();
        let llm = provider(&["SELECT * FROM missing FULL OUTER JOIN b ON c", "SELECT * FROM a FULL OUTER JOIN b ON c = d"]);
        let r = llm_reduce(&q(), ERR, &llm, &mut src, &mut tgt).unwrap();
        assert_eq!(r.query.unwrap().text, "SELECT * FROM a FULL OUTER JOIN b ON c = d");
        assert!(r.rejected[0].1.starts_with("fails on the source"));
    }
}
