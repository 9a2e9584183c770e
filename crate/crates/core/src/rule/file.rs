//! Rule files: one JSON object per rule.
//!
//! ```json
//! {
//!   "id": "3f0c9a1e55d2b7c4",
//!   "source_pattern": "(table_ref(TREE_1))",
//!   "target_pattern": "(table_ref(TREE_1)(alias_clause(AS)(ANYVALUE)))",
//!   "symbols": {"TREE_1": "select_with_parens"},
//!   "provenance": {"simplified_query": "...", "translated_query": "...", "created_at": "..."},
//!   "dialect_note": "derived tables need an alias"
//! }
//! ```
//!
//! `symbols` maps `$N` to the category it binds and `TREE_N` to the root
//! kind of the subtree it binds. `id` defaults to the content hash.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::pattern::PatternNode;
use super::{content_id, Provenance, TranslationRule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule file field `{field}`: {message}")]
pub struct RuleFileError {
    pub field: String,
    pub message: String,
}

fn field_err(field: &str, message: impl Into<String>) -> RuleFileError {
    RuleFileError { field: field.to_string(), message: message.into() }
}

pub fn rule_to_file(rule: &TranslationRule) -> Vec<u8> {
    let mut symbols = rule.target.declarations();
    symbols.extend(rule.source.declarations());
    let value = json!({
        "id": rule.id,
        "source_pattern": rule.source.to_bracket(),
        "target_pattern": rule.target.to_bracket(),
        "symbols": symbols,
        "provenance": rule.provenance,
        "dialect_note": rule.dialect_note,
    });
    let mut bytes = serde_json::to_vec_pretty(&value).expect("rule serializes");
    bytes.push(b'\n');
    bytes
}

pub fn rule_from_file(bytes: &[u8]) -> Result<TranslationRule, RuleFileError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| field_err("<document>", e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(field_err("<document>", "expected a JSON object"));
    };
    let symbols = match obj.get("symbols") {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(Value::Object(m)) => m
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => Ok((k.clone(), s.clone())),
                _ => Err(field_err(&format!("symbols.{k}"), "expected a string")),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(field_err("symbols", "expected an object")),
    };
    let pattern = |field: &str| -> Result<PatternNode, RuleFileError> {
        let text = required_str(&obj, field)?;
        PatternNode::from_bracket(text, &symbols).map_err(|e| field_err(field, e.to_string()))
    };
    let source = pattern("source_pattern")?;
    let target = pattern("target_pattern")?;
    let provenance = match obj.get("provenance") {
        None | Some(Value::Null) => Provenance::default(),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| field_err("provenance", e.to_string()))?,
    };
    let dialect_note = optional_str(&obj, "dialect_note")?.unwrap_or_default();
    let id = match optional_str(&obj, "id")? {
        Some(id) if id.trim().is_empty() => return Err(field_err("id", "empty id")),
        Some(id) => id,
        None => content_id(&source, &target),
    };
    Ok(TranslationRule { id, source, target, provenance, dialect_note })
}

fn required_str<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a str, RuleFileError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(field_err(field, "expected a string")),
        None => Err(field_err(field, "missing")),
    }
}

fn optional_str(obj: &Map<String, Value>, field: &str) -> Result<Option<String>, RuleFileError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(field_err(field, "expected a string")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::mine_rule;
    use crate::sql::parse;

    #[test]
    fn round_trip() {
        let prov = Provenance {
            simplified_query: "SELECT * FROM (SELECT 1)".into(),
            translated_query: "SELECT * FROM (SELECT 1) AS t1".into(),
            created_at: "2026-01-01T00:00:00Z".into(),
        };
        let r = mine_rule(&parse(&prov.simplified_query).unwrap(), &parse(&prov.translated_query).unwrap(), prov.clone(), "alias").unwrap();
        let bytes = rule_to_file(&r);
        assert_eq!(rule_from_file(&bytes).unwrap(), r);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("\"TREE_1\": \"select_with_parens\""), "{text}");
    }

    #[test]
    fn missing_target_is_a_schema_error() {
        let err = rule_from_file(br#"{"source_pattern": "(a(b))"}"#).unwrap_err();
        assert_eq!(err.field, "target_pattern");
        assert_eq!(err.message, "missing");
    }

    #[test]
    fn malformed_pattern_names_field() {
        let err = rule_from_file(br#"{"source_pattern": "(a(b))", "target_pattern": "(a(b)"}"#).unwrap_err();
        assert_eq!(err.field, "target_pattern");
    }

    #[test]
    fn id_defaults_to_content_hash() {
        let r = rule_from_file(br#"{"source_pattern": "(a(b))", "target_pattern": "(a(c))"}"#).unwrap();
        assert_eq!(r.id, content_id(&r.source, &r.target));
    }
}
