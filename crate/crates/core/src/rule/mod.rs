//! Translation rules: mining them from a query pair, checking them and
//! storing them as files.

pub mod abstraction;
pub mod extract;
pub mod file;
pub mod pattern;
pub mod validate;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use abstraction::abstract_rule;
pub use extract::{extract_initial, Extraction};
pub use file::{rule_from_file, rule_to_file, RuleFileError};
pub use pattern::{PatternNode, Symbol};
pub use validate::{validate_rule, Violation};

use crate::tree::TreeNode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("the two trees are identical; there is no difference to extract")]
    NoDifference,
    #[error("contract violated: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default)]
    pub simplified_query: String,
    #[serde(default)]
    pub translated_query: String,
    #[serde(default)]
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRule {
    pub id: String,
    pub source: PatternNode,
    pub target: PatternNode,
    pub provenance: Provenance,
    pub dialect_note: String,
}

impl TranslationRule {
    /// Builds a rule whose id is the content hash of its patterns.
    pub fn new(source: PatternNode, target: PatternNode, provenance: Provenance, dialect_note: impl Into<String>) -> Self {
        let id = content_id(&source, &target);
        TranslationRule { id, source, target, provenance, dialect_note: dialect_note.into() }
    }
}

/// First 16 hex digits of SHA-256 over both bracket strings and the
/// symbol declarations.
pub fn content_id(source: &PatternNode, target: &PatternNode) -> String {
    let mut h = Sha256::new();
    h.update(source.to_bracket());
    h.update("\n");
    h.update(target.to_bracket());
    for (sym, value) in source.declarations().into_iter().chain(target.declarations()) {
        h.update(format!("\n{sym}={value}"));
    }
    hex::encode(h.finalize())[..16].to_string()
}

/// Extraction followed by abstraction.
pub fn mine_rule(
    simplified: &TreeNode,
    translated: &TreeNode,
    provenance: Provenance,
    dialect_note: impl Into<String>,
) -> Result<TranslationRule, RuleError> {
    let e = extract_initial(simplified, translated)?;
    let (source, target) = abstract_rule(&e.source, &e.target)?;
    Ok(TranslationRule::new(source, target, provenance, dialect_note))
}
