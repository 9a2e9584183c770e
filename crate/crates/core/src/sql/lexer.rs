//! Tokenizer driven by the keyword and punctuation inventory of a grammar.

use super::grammar::Grammar;
use super::ParseDiagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    Iconst,
    Fconst,
    Sconst,
    Punct,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Keywords are uppercased, everything else is kept verbatim.
    pub text: String,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    grammar: &'a Grammar,
}

impl Cursor<'_> {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.pos];
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        c
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn error(&self, line: usize, column: usize, found: String, expected: &str) -> ParseDiagnostic {
        ParseDiagnostic { line, column, expected: vec![expected.to_string()], found }
    }
}

pub fn tokenize(grammar: &Grammar, input: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut cur = Cursor { chars: input.chars().collect(), pos: 0, line: 1, column: 1, grammar };
    let mut tokens = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let (line, column) = (cur.line, cur.column);
        let Some(c) = cur.peek(0) else {
            tokens.push(Token { kind: TokenKind::Eof, text: String::new(), line, column });
            return Ok(tokens);
        };
        let (kind, text) = if c == '\'' {
            (TokenKind::Sconst, lex_quoted(&mut cur, '\'', line, column)?)
        } else if c == '"' {
            (TokenKind::Ident, lex_quoted(&mut cur, '"', line, column)?)
        } else if c.is_ascii_digit() || (c == '.' && cur.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur)
        } else if c.is_alphabetic() || c == '_' {
            let mut word = String::new();
            while cur.peek(0).is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '$') {
                word.push(cur.bump());
            }
            let upper = word.to_ascii_uppercase();
            if cur.grammar.is_keyword(&upper) {
                (TokenKind::Keyword, upper)
            } else {
                (TokenKind::Ident, word)
            }
        } else if let Some(p) = cur.grammar.multi_punct().iter().find(|p| cur.starts_with(p)).cloned() {
            for _ in p.chars() {
                cur.bump();
            }
            (TokenKind::Punct, p)
        } else if cur.grammar.is_single_punct(c) {
            cur.bump();
            (TokenKind::Punct, c.to_string())
        } else {
            return Err(cur.error(line, column, c.to_string(), "token"));
        };
        tokens.push(Token { kind, text, line, column });
    }
}

fn skip_trivia(cur: &mut Cursor) -> Result<(), ParseDiagnostic> {
    loop {
        match cur.peek(0) {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('-') if cur.peek(1) == Some('-') => {
                while cur.peek(0).is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            Some('/') if cur.peek(1) == Some('*') => {
                let (line, column) = (cur.line, cur.column);
                cur.bump();
                cur.bump();
                loop {
                    if cur.peek(0).is_none() {
                        return Err(cur.error(line, column, "/*".into(), "*/"));
                    }
                    if cur.starts_with("*/") {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    cur.bump();
                }
            }
            _ => return Ok(()),
        }
    }
}

/// Reads a quoted token; a doubled quote stands for one quote character.
fn lex_quoted(cur: &mut Cursor, quote: char, line: usize, column: usize) -> Result<String, ParseDiagnostic> {
    let mut text = String::new();
    text.push(cur.bump());
    loop {
        match cur.peek(0) {
            None => {
                let what = if quote == '\'' { "closing quote" } else { "closing double quote" };
                return Err(cur.error(line, column, text, what));
            }
            Some(c) if c == quote => {
                text.push(cur.bump());
                if cur.peek(0) == Some(quote) {
                    text.push(cur.bump());
                } else {
                    return Ok(text);
                }
            }
            Some(_) => text.push(cur.bump()),
        }
    }
}

fn lex_number(cur: &mut Cursor) -> (TokenKind, String) {
    let mut text = String::new();
    let mut kind = TokenKind::Iconst;
    while cur.peek(0).is_some_and(|c| c.is_ascii_digit()) {
        text.push(cur.bump());
    }
    // `1..10` is a range, not `1.` followed by `.10`
    if cur.peek(0) == Some('.') && cur.peek(1) != Some('.') {
        kind = TokenKind::Fconst;
        text.push(cur.bump());
        while cur.peek(0).is_some_and(|c| c.is_ascii_digit()) {
            text.push(cur.bump());
        }
    }
    if matches!(cur.peek(0), Some('e' | 'E')) {
        let sign = matches!(cur.peek(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if cur.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            kind = TokenKind::Fconst;
            for _ in 0..digit_at {
                text.push(cur.bump());
            }
            while cur.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                text.push(cur.bump());
            }
        }
    }
    (kind, text)
}
