//! Loader for the PEG grammar data file.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

/// Token classes a grammar may reference by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenClass {
    Ident,
    Iconst,
    Fconst,
    Number,
    Sconst,
    Nonreserved,
    Func,
    Eof,
}

impl TokenClass {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "IDENT" => TokenClass::Ident,
            "ICONST" => TokenClass::Iconst,
            "FCONST" => TokenClass::Fconst,
            "NUMBER" => TokenClass::Number,
            "SCONST" => TokenClass::Sconst,
            "NONRESERVED" => TokenClass::Nonreserved,
            "FUNC" => TokenClass::Func,
            "EOF" => TokenClass::Eof,
            _ => return None,
        })
    }

    pub fn describe(self) -> &'static str {
        match self {
            TokenClass::Ident => "identifier",
            TokenClass::Iconst => "integer",
            TokenClass::Fconst => "decimal number",
            TokenClass::Number => "number",
            TokenClass::Sconst => "string literal",
            TokenClass::Nonreserved => "non-reserved keyword",
            TokenClass::Func => "function name",
            TokenClass::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Seq(Vec<Expr>),
    Choice(Vec<Expr>),
    Optional(Box<Expr>),
    Star(Box<Expr>),
    Plus(Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>),
    Keyword(String),
    Punct(String),
    Class(TokenClass),
    Rule(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleMode {
    Node,
    Collapse,
    Inline,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    pub mode: RuleMode,
    pub expr: Expr,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("grammar error at line {line}: {message}")]
pub struct GrammarError {
    pub line: usize,
    pub message: String,
}

/// A loaded grammar: rules plus the keyword and punctuation inventories
/// the lexer derives from it.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<Rule>,
    keywords: BTreeSet<String>,
    reserved: BTreeSet<String>,
    functions: BTreeSet<String>,
    /// Multi-character punctuation, longest first.
    multi_punct: Vec<String>,
    single_punct: BTreeSet<char>,
}

impl Grammar {
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, index: usize) -> &Rule {
        &self.rules[index]
    }

    pub fn is_keyword(&self, upper: &str) -> bool {
        self.keywords.contains(upper)
    }

    pub fn is_reserved(&self, upper: &str) -> bool {
        self.reserved.contains(upper)
    }

    pub fn is_function(&self, upper: &str) -> bool {
        self.functions.contains(upper)
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }

    pub(crate) fn multi_punct(&self) -> &[String] {
        &self.multi_punct
    }

    pub(crate) fn is_single_punct(&self, c: char) -> bool {
        self.single_punct.contains(&c)
    }

    pub fn parse(source: &str) -> Result<Grammar, GrammarError> {
        let tokens = lex_grammar(source)?;
        GrammarBuilder::new(tokens).build()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum GTok {
    Directive(String),
    Name(String),
    Quoted(String),
    Sym(char),
}

fn lex_grammar(source: &str) -> Result<Vec<(GTok, usize)>, GrammarError> {
    let mut out = Vec::new();
    for (lineno, line) in source.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '\'' {
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&c| c == '\'')
                    .map(|p| start + p)
                    .ok_or_else(|| GrammarError { line: line_no, message: "unterminated literal".into() })?;
                if end == start {
                    return Err(GrammarError { line: line_no, message: "empty literal".into() });
                }
                out.push((GTok::Quoted(chars[start..end].iter().collect()), line_no));
                i = end + 1;
                continue;
            }
            if c == '@' || c.is_alphanumeric() || c == '_' {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if let Some(d) = word.strip_prefix('@') {
                    out.push((GTok::Directive(d.to_string()), line_no));
                } else {
                    out.push((GTok::Name(word), line_no));
                }
                continue;
            }
            if "=;|?*+!&()~".contains(c) {
                out.push((GTok::Sym(c), line_no));
                i += 1;
                continue;
            }
            return Err(GrammarError { line: line_no, message: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct GrammarBuilder {
    tokens: Vec<(GTok, usize)>,
    pos: usize,
    rule_index: HashMap<String, usize>,
    rule_lines: Vec<usize>,
    keywords: BTreeSet<String>,
    punct: BTreeSet<String>,
    unresolved: Vec<(String, usize)>,
}

impl GrammarBuilder {
    fn new(tokens: Vec<(GTok, usize)>) -> Self {
        GrammarBuilder {
            tokens,
            pos: 0,
            rule_index: HashMap::new(),
            rule_lines: Vec::new(),
            keywords: BTreeSet::new(),
            punct: BTreeSet::new(),
            unresolved: Vec::new(),
        }
    }

    fn line(&self) -> usize {
        self.tokens.get(self.pos).or_else(|| self.tokens.last()).map_or(1, |t| t.1)
    }

    fn err(&self, message: impl Into<String>) -> GrammarError {
        GrammarError { line: self.line(), message: message.into() }
    }

    fn peek(&self) -> Option<&GTok> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<GTok> {
        let tok = self.tokens.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        tok
    }

    fn expect_sym(&mut self, c: char) -> Result<(), GrammarError> {
        match self.next() {
            Some(GTok::Sym(s)) if s == c => Ok(()),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected '{c}', found {other:?}")))
            }
        }
    }

    fn build(mut self) -> Result<Grammar, GrammarError> {
        let mut reserved = BTreeSet::new();
        let mut functions = BTreeSet::new();
        // First pass: collect rule names so references can resolve in any order.
        let mut names = Vec::new();
        {
            let mut i = 0;
            while i < self.tokens.len() {
                if let (GTok::Name(n), line) = &self.tokens[i] {
                    let prev_is_boundary = i == 0 || matches!(self.tokens[i - 1].0, GTok::Sym(';') | GTok::Sym('~'));
                    let next_is_eq = matches!(self.tokens.get(i + 1), Some((GTok::Sym('='), _)));
                    if prev_is_boundary && next_is_eq {
                        if n.chars().any(|c| c.is_uppercase()) {
                            return Err(GrammarError { line: *line, message: format!("rule name {n} is not lowercase") });
                        }
                        if self.rule_index.contains_key(n) {
                            return Err(GrammarError { line: *line, message: format!("duplicate rule {n}") });
                        }
                        self.rule_index.insert(n.clone(), names.len());
                        self.rule_lines.push(*line);
                        names.push(n.clone());
                    }
                }
                i += 1;
            }
        }
        let mut rules: Vec<Option<Rule>> = vec![None; names.len()];
        while let Some(tok) = self.peek().cloned() {
            match tok {
                GTok::Directive(d) => {
                    self.next();
                    let mut words = BTreeSet::new();
                    loop {
                        match self.next() {
                            Some(GTok::Name(w)) => {
                                words.insert(w.to_ascii_uppercase());
                            }
                            Some(GTok::Sym(';')) => break,
                            other => return Err(self.err(format!("bad token in @{d}: {other:?}"))),
                        }
                    }
                    match d.as_str() {
                        "reserved" => reserved.extend(words),
                        "functions" => functions.extend(words),
                        _ => return Err(self.err(format!("unknown directive @{d}"))),
                    }
                }
                _ => {
                    let collapse = matches!(tok, GTok::Sym('~'));
                    if collapse {
                        self.next();
                    }
                    let name = match self.next() {
                        Some(GTok::Name(n)) => n,
                        other => return Err(self.err(format!("expected rule name, found {other:?}"))),
                    };
                    self.expect_sym('=')?;
                    let expr = self.parse_choice()?;
                    self.expect_sym(';')?;
                    let mode = if collapse {
                        RuleMode::Collapse
                    } else if name.starts_with('_') {
                        RuleMode::Inline
                    } else {
                        RuleMode::Node
                    };
                    let idx = self.rule_index[&name];
                    rules[idx] = Some(Rule { name, mode, expr });
                }
            }
        }
        if let Some((name, line)) = self.unresolved.first() {
            return Err(GrammarError { line: *line, message: format!("undefined rule {name}") });
        }
        let rules: Vec<Rule> = rules.into_iter().map(|r| r.expect("every named rule is defined")).collect();
        if rules.is_empty() {
            return Err(GrammarError { line: 1, message: "grammar has no rules".into() });
        }
        for word in &reserved {
            if !self.keywords.contains(word) {
                return Err(GrammarError { line: 1, message: format!("reserved word {word} is not used by any rule") });
            }
        }
        let mut keywords = self.keywords;
        keywords.extend(functions.iter().cloned());
        let mut multi_punct: Vec<String> = self.punct.iter().filter(|p| p.chars().count() > 1).cloned().collect();
        multi_punct.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        let single_punct = self.punct.iter().flat_map(|p| p.chars()).collect();
        Ok(Grammar { rules, keywords, reserved, functions, multi_punct, single_punct })
    }

    fn parse_choice(&mut self) -> Result<Expr, GrammarError> {
        let mut alts = vec![self.parse_seq()?];
        while matches!(self.peek(), Some(GTok::Sym('|'))) {
            self.next();
            alts.push(self.parse_seq()?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Expr::Choice(alts) })
    }

    fn parse_seq(&mut self) -> Result<Expr, GrammarError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Some(GTok::Sym('|')) | Some(GTok::Sym(';')) | Some(GTok::Sym(')')) | None => break,
                _ => items.push(self.parse_prefix()?),
            }
        }
        if items.is_empty() {
            return Err(self.err("empty sequence"));
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Seq(items) })
    }

    fn parse_prefix(&mut self) -> Result<Expr, GrammarError> {
        match self.peek() {
            Some(GTok::Sym('!')) => {
                self.next();
                Ok(Expr::Not(Box::new(self.parse_postfix()?)))
            }
            Some(GTok::Sym('&')) => {
                self.next();
                Ok(Expr::And(Box::new(self.parse_postfix()?)))
            }
            _ => self.parse_postfix(),
        }
    }

    fn parse_postfix(&mut self) -> Result<Expr, GrammarError> {
        let mut expr = self.parse_primary()?;
        loop {
            expr = match self.peek() {
                Some(GTok::Sym('?')) => Expr::Optional(Box::new(expr)),
                Some(GTok::Sym('*')) => Expr::Star(Box::new(expr)),
                Some(GTok::Sym('+')) => Expr::Plus(Box::new(expr)),
                _ => return Ok(expr),
            };
            self.next();
        }
    }

    fn parse_primary(&mut self) -> Result<Expr, GrammarError> {
        let line = self.line();
        match self.next() {
            Some(GTok::Sym('(')) => {
                let inner = self.parse_choice()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Some(GTok::Quoted(lit)) => {
                let is_word = lit.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && lit.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if is_word {
                    let upper = lit.to_ascii_uppercase();
                    self.keywords.insert(upper.clone());
                    Ok(Expr::Keyword(upper))
                } else {
                    self.punct.insert(lit.clone());
                    Ok(Expr::Punct(lit))
                }
            }
            Some(GTok::Name(name)) => {
                if let Some(class) = TokenClass::from_name(&name) {
                    return Ok(Expr::Class(class));
                }
                match self.rule_index.get(&name) {
                    Some(&idx) => Ok(Expr::Rule(idx)),
                    None => {
                        self.unresolved.push((name, line));
                        Ok(Expr::Rule(usize::MAX))
                    }
                }
            }
            other => {
                self.pos -= 1;
                Err(self.err(format!("unexpected {other:?}")))
            }
        }
    }
}
