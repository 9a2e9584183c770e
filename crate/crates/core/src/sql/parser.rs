//! Packrat PEG interpreter over the token stream.

use std::collections::BTreeSet;

use super::grammar::{Expr, Grammar, RuleMode, TokenClass};
use super::lexer::{Token, TokenKind};
use super::ParseDiagnostic;
use crate::tree::{Category, TreeNode};

type MemoEntry = Option<(usize, Vec<TreeNode>)>;

pub(crate) struct Engine<'g> {
    grammar: &'g Grammar,
    tokens: &'g [Token],
    memo: Vec<Option<MemoEntry>>,
    farthest: usize,
    expected: BTreeSet<String>,
    lookahead: usize,
}

impl<'g> Engine<'g> {
    pub(crate) fn new(grammar: &'g Grammar, tokens: &'g [Token]) -> Self {
        Engine {
            grammar,
            tokens,
            memo: vec![None; grammar.rules().len() * tokens.len()],
            farthest: 0,
            expected: BTreeSet::new(),
            lookahead: 0,
        }
    }

    /// Parses the whole token stream with the start rule.
    pub(crate) fn run(mut self) -> Result<TreeNode, ParseDiagnostic> {
        let mut out = Vec::new();
        match self.call(0, 0, &mut out) {
            Some(_) if out.len() == 1 && !out[0].is_terminal() => Ok(out.pop().unwrap()),
            Some(_) => Ok(TreeNode::nonterminal(self.grammar.rule(0).name.clone(), out)),
            None => Err(self.diagnostic()),
        }
    }

    fn diagnostic(&self) -> ParseDiagnostic {
        let tok = &self.tokens[self.farthest.min(self.tokens.len() - 1)];
        let found = if tok.kind == TokenKind::Eof { "end of input".to_string() } else { tok.text.clone() };
        ParseDiagnostic { line: tok.line, column: tok.column, expected: self.expected.iter().cloned().collect(), found }
    }

    fn fail(&mut self, pos: usize, what: impl FnOnce() -> String) {
        if self.lookahead > 0 {
            return;
        }
        if pos > self.farthest {
            self.farthest = pos;
            self.expected.clear();
        }
        if pos == self.farthest {
            self.expected.insert(what());
        }
    }

    fn call(&mut self, rule: usize, pos: usize, out: &mut Vec<TreeNode>) -> Option<usize> {
        let slot = rule * self.tokens.len() + pos;
        if let Some(entry) = &self.memo[slot] {
            return entry.as_ref().map(|(end, nodes)| {
                out.extend(nodes.iter().cloned());
                *end
            });
        }
        let def = self.grammar.rule(rule);
        let mut children = Vec::new();
        let result = self.eval(&def.expr, pos, &mut children).map(|end| {
            let produced = match def.mode {
                _ if children.is_empty() => Vec::new(),
                RuleMode::Inline => children,
                RuleMode::Collapse if children.len() == 1 => children,
                RuleMode::Node | RuleMode::Collapse => vec![TreeNode::nonterminal(def.name.clone(), children)],
            };
            (end, produced)
        });
        if let Some((end, nodes)) = &result {
            out.extend(nodes.iter().cloned());
            self.memo[slot] = Some(Some((*end, nodes.clone())));
            Some(*end)
        } else {
            self.memo[slot] = Some(None);
            None
        }
    }

    fn eval(&mut self, expr: &Expr, pos: usize, out: &mut Vec<TreeNode>) -> Option<usize> {
        match expr {
            Expr::Seq(items) => {
                let mark = out.len();
                let mut p = pos;
                for item in items {
                    match self.eval(item, p, out) {
                        Some(next) => p = next,
                        None => {
                            out.truncate(mark);
                            return None;
                        }
                    }
                }
                Some(p)
            }
            Expr::Choice(alts) => alts.iter().find_map(|alt| self.eval(alt, pos, out)),
            Expr::Optional(inner) => Some(self.eval(inner, pos, out).unwrap_or(pos)),
            Expr::Star(inner) => Some(self.repeat(inner, pos, out)),
            Expr::Plus(inner) => {
                let first = self.eval(inner, pos, out)?;
                Some(self.repeat(inner, first, out))
            }
            Expr::Not(inner) => {
                self.lookahead += 1;
                let hit = self.eval(inner, pos, &mut Vec::new());
                self.lookahead -= 1;
                if hit.is_some() {
                    self.fail(pos, || "something else".to_string());
                    None
                } else {
                    Some(pos)
                }
            }
            Expr::And(inner) => {
                self.lookahead += 1;
                let hit = self.eval(inner, pos, &mut Vec::new());
                self.lookahead -= 1;
                hit.map(|_| pos)
            }
            Expr::Keyword(word) => {
                let tok = &self.tokens[pos];
                if tok.kind == TokenKind::Keyword && tok.text == *word {
                    out.push(TreeNode::terminal(Category::Keyword, word.clone()));
                    Some(pos + 1)
                } else {
                    self.fail(pos, || word.clone());
                    None
                }
            }
            Expr::Punct(p) => {
                let tok = &self.tokens[pos];
                if tok.kind == TokenKind::Punct && tok.text == *p {
                    out.push(TreeNode::terminal(Category::Punctuation, p.clone()));
                    Some(pos + 1)
                } else {
                    self.fail(pos, || format!("'{p}'"));
                    None
                }
            }
            Expr::Class(class) => self.class(*class, pos, out),
            Expr::Rule(idx) => self.call(*idx, pos, out),
        }
    }

    fn repeat(&mut self, inner: &Expr, mut pos: usize, out: &mut Vec<TreeNode>) -> usize {
        while let Some(next) = self.eval(inner, pos, out) {
            if next == pos {
                break;
            }
            pos = next;
        }
        pos
    }

    fn class(&mut self, class: TokenClass, pos: usize, out: &mut Vec<TreeNode>) -> Option<usize> {
        let tok = &self.tokens[pos];
        let category = match (class, tok.kind) {
            (TokenClass::Eof, TokenKind::Eof) => return Some(pos),
            (TokenClass::Ident, TokenKind::Ident) => Category::Identifier,
            (TokenClass::Iconst, TokenKind::Iconst)
            | (TokenClass::Fconst, TokenKind::Fconst)
            | (TokenClass::Number, TokenKind::Iconst | TokenKind::Fconst) => Category::NumericLiteral,
            (TokenClass::Sconst, TokenKind::Sconst) => Category::StringLiteral,
            (TokenClass::Nonreserved, TokenKind::Keyword) if !self.grammar.is_reserved(&tok.text) => Category::Keyword,
            (TokenClass::Func, TokenKind::Keyword) if self.grammar.is_function(&tok.text) => Category::Keyword,
            _ => {
                self.fail(pos, || class.describe().to_string());
                return None;
            }
        };
        out.push(TreeNode::terminal(category, tok.text.clone()));
        Some(pos + 1)
    }
}
