//! Prompt templates shipped in `prompts/`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::{Captures, Regex};

use super::Prompt;
use crate::sql::Query;

pub const REDUCTION: &str = "reduction";
pub const SUMMARY: &str = "summary";
pub const TRANSLATE: &str = "translate";

const REDUCTION_TEXT: &str = include_str!("../../prompts/reduction.txt");
const SUMMARY_TEXT: &str = include_str!("../../prompts/summary.txt");
const TRANSLATE_TEXT: &str = include_str!("../../prompts/translate.txt");

pub fn template(id: &str) -> Option<&'static str> {
    let text = match id {
        REDUCTION => REDUCTION_TEXT,
        SUMMARY => SUMMARY_TEXT,
        TRANSLATE => TRANSLATE_TEXT,
        _ => return None,
    };
    Some(text.trim_end_matches('\n'))
}

/// Substitutes `{name}` placeholders in one pass. Unknown names stay as
/// written.
pub fn render_template(template: &str, slots: &BTreeMap<String, String>) -> String {
    static PLACEHOLDER: OnceLock<Regex> = OnceLock::new();
    let re = PLACEHOLDER.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"));
    re.replace_all(template, |c: &Captures| slots.get(&c[1]).cloned().unwrap_or_else(|| c[0].to_string())).into_owned()
}

fn build(id: &str, slots: BTreeMap<String, String>) -> Prompt {
    let text = render_template(template(id).expect("known template"), &slots);
    Prompt { template_id: id.to_string(), slots, text }
}

fn slots(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// The reduction prompt for `q`.
pub fn reduction_prompt(q: &Query, source_db: &str, target_db: &str, original_error: &str) -> Prompt {
    reduction_prompt_with_rejected(q, source_db, target_db, original_error, &[])
}

/// The reduction prompt followed by earlier candidates that were turned
/// down, one `candidate -- reason` line each.
pub fn reduction_prompt_with_rejected(q: &Query, source_db: &str, target_db: &str, original_error: &str, rejected: &[String]) -> Prompt {
    let rejected_text = rejected.join("\n");
    let mut p = build(
        REDUCTION,
        slots(&[
            ("source_db", source_db),
            ("target_db", target_db),
            ("original_error", original_error),
            ("sql", &q.text),
            ("rejected", &rejected_text),
        ]),
    );
    if !rejected.is_empty() {
        p.text.push_str("\nThese earlier answers were rejected:\n");
        p.text.push_str(&rejected_text);
    }
    p
}

pub fn summary_prompt(q: &Query, source_db: &str, target_db: &str, feedback: &str) -> Prompt {
    build(SUMMARY, slots(&[("source_db", source_db), ("target_db", target_db), ("sql", &q.text), ("feedback", feedback)]))
}

pub fn translate_prompt(q: &Query, source_db: &str, target_db: &str, feedback: &str, summary: &str, rejected: &[String]) -> Prompt {
    let rejected = if rejected.is_empty() { "(none)".to_string() } else { rejected.join("\n") };
    build(
        TRANSLATE,
        slots(&[
            ("source_db", source_db),
            ("target_db", target_db),
            ("sql", &q.text),
            ("feedback", feedback),
            ("summary", summary),
            ("rejected", &rejected),
        ]),
    )
}
