//! SQL front end: a grammar-driven parser and a renderer.
//!
//! The grammar lives in `grammar/sql.peg` and is compiled into the crate.
//! [`SqlParser::from_grammar_source`] accepts an edited copy.

pub mod grammar;
pub mod lexer;
mod parser;
pub mod render;

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grammar::{Grammar, GrammarError};
pub use lexer::{Token, TokenKind};
pub use render::RenderError;

use crate::tree::TreeNode;

/// The bundled grammar source.
pub const DEFAULT_GRAMMAR: &str = include_str!("../../grammar/sql.peg");

/// A syntax error: where parsing stopped, what would have been accepted
/// there, and what was found instead.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{} near {:?}", self.line, self.column, self.found)?;
        if !self.expected.is_empty() {
            write!(f, ", expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Query text tagged with the dialect it is written in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub dialect: String,
}

impl Query {
    pub fn new(text: impl Into<String>, dialect: impl Into<String>) -> Self {
        Query { text: text.into(), dialect: dialect.into() }
    }
}

#[derive(Debug, Clone)]
pub struct SqlParser {
    grammar: Grammar,
}

impl SqlParser {
    pub fn new(grammar: Grammar) -> Self {
        SqlParser { grammar }
    }

    pub fn from_grammar_source(source: &str) -> Result<Self, GrammarError> {
        Ok(SqlParser::new(Grammar::parse(source)?))
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
        lexer::tokenize(&self.grammar, text)
    }

    pub fn parse(&self, text: &str) -> Result<TreeNode, ParseDiagnostic> {
        let tokens = self.tokenize(text)?;
        parser::Engine::new(&self.grammar, &tokens).run()
    }

    pub fn render(&self, tree: &TreeNode) -> Result<String, RenderError> {
        render::render(&self.grammar, tree)
    }

    /// Token texts joined by single spaces, keywords uppercased. Queries
    /// that differ only in layout, comments or keyword case normalize alike.
    pub fn normalize(&self, text: &str) -> String {
        match self.tokenize(text) {
            Ok(tokens) => tokens.iter().filter(|t| t.kind != TokenKind::Eof).map(|t| t.text.to_uppercase()).collect::<Vec<_>>().join(" "),
            Err(_) => text.split_whitespace().collect::<Vec<_>>().join(" ").to_uppercase(),
        }
    }
}

/// The parser for the bundled grammar.
pub fn default_parser() -> &'static SqlParser {
    static PARSER: OnceLock<SqlParser> = OnceLock::new();
    PARSER.get_or_init(|| SqlParser::from_grammar_source(DEFAULT_GRAMMAR).expect("bundled grammar is valid"))
}

pub fn parse(text: &str) -> Result<TreeNode, ParseDiagnostic> {
    default_parser().parse(text)
}

pub fn render(tree: &TreeNode) -> Result<String, RenderError> {
    default_parser().render(tree)
}

pub fn normalize(text: &str) -> String {
    default_parser().normalize(text)
}
