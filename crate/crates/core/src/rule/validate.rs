use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::pattern::{Symbol, SymbolDecl};
use super::TranslationRule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "symbol", rename_all = "kebab-case")]
pub enum Violation {
    /// A target symbol the source never binds.
    UnboundSlot(String),
    FreshInSource(String),
    /// Numbering of `$N` or `TREE_N` has a gap or does not start at 1.
    NonDenseNumbering(String),
    /// The same symbol is declared differently in two places.
    ConflictingDeclaration(String),
    SourceRootIsSymbol(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnboundSlot(s) => write!(f, "unbound slot {s}"),
            Violation::FreshInSource(s) => write!(f, "{s} appears in the source pattern"),
            Violation::NonDenseNumbering(s) => write!(f, "symbol numbering is not dense: {s}"),
            Violation::ConflictingDeclaration(s) => write!(f, "conflicting declarations for {s}"),
            Violation::SourceRootIsSymbol(s) => write!(f, "source pattern is the bare symbol {s}"),
        }
    }
}

/// Checks the rule invariants. Returns every violation found.
pub fn validate_rule(rule: &TranslationRule) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if let Some(sym) = rule.source.symbol() {
        out.push(Violation::SourceRootIsSymbol(sym.to_string()));
    }
    let src = rule.source.symbols();
    let tgt = rule.target.symbols();
    let bound: BTreeSet<Symbol> = src.iter().map(|(s, _)| *s).collect();
    for (sym, _) in &src {
        if matches!(sym, Symbol::Fresh(_)) && !out.contains(&Violation::FreshInSource(sym.to_string())) {
            out.push(Violation::FreshInSource(sym.to_string()));
        }
    }
    for (sym, _) in &tgt {
        if !matches!(sym, Symbol::Fresh(_)) && !bound.contains(sym) {
            let v = Violation::UnboundSlot(sym.to_string());
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    let mut decls: BTreeMap<Symbol, Option<SymbolDecl>> = BTreeMap::new();
    for (sym, decl) in src.iter().chain(&tgt) {
        match decls.get(sym) {
            None => {
                decls.insert(*sym, decl.clone());
            }
            Some(existing) if existing != decl => {
                let v = Violation::ConflictingDeclaration(sym.to_string());
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            Some(_) => {}
        }
    }
    let all: BTreeSet<Symbol> = decls.keys().copied().collect();
    for (family, pick) in [
        ("$N", (|s: &Symbol| if let Symbol::Slot(i) = s { Some(*i) } else { None }) as fn(&Symbol) -> Option<usize>),
        ("TREE_N", |s: &Symbol| if let Symbol::Tree(i) = s { Some(*i) } else { None }),
        ("ANYVALUE_N", |s: &Symbol| if let Symbol::Fresh(i) = s { Some(*i) } else { None }),
    ] {
        let nums: Vec<usize> = all.iter().filter_map(pick).collect();
        if nums.iter().enumerate().any(|(i, &n)| n != i + 1) {
            let listed: Vec<String> = nums.iter().map(usize::to_string).collect();
            out.push(Violation::NonDenseNumbering(format!("{family} uses {}", listed.join(","))));
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
