//! Flat lexical tokenization with character spans.
//!
//! Grammars are looked up by name in a [`GrammarRegistry`]. The built-in
//! `c-family` grammar covers C, C++, Java, C# and JavaScript-style sources
//! well enough for identifier-level attention analysis.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracker::CharRange;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TokenizeError {
    #[error("unknown grammar {0:?}")]
    UnknownGrammar(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Comment,
    Punct,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawToken {
    pub kind: TokenKind,
    pub text: String,
    pub span: CharRange,
    pub line: usize,
    pub col: usize,
    /// Set on a string or comment that runs to end-of-file without closing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unterminated: bool,
}

/// A tokenizer for one language. Implementations must cover every
/// non-whitespace character with exactly one token, emit tokens in span
/// order and never emit whitespace-only tokens.
pub trait Grammar: Send + Sync {
    fn name(&self) -> &str;
    fn tokenize(&self, text: &str) -> Vec<RawToken>;
}

#[derive(Clone)]
pub struct GrammarRegistry {
    grammars: BTreeMap<String, Arc<dyn Grammar>>,
}

impl GrammarRegistry {
    pub fn empty() -> Self {
        GrammarRegistry {
            grammars: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, grammar: Arc<dyn Grammar>) {
        self.grammars.insert(grammar.name().to_string(), grammar);
    }

    pub fn get(&self, name: &str) -> Result<&Arc<dyn Grammar>, TokenizeError> {
        self.grammars
            .get(name)
            .ok_or_else(|| TokenizeError::UnknownGrammar(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.grammars.keys().map(String::as_str)
    }

    pub fn tokenize(&self, text: &str, grammar: &str) -> Result<Vec<RawToken>, TokenizeError> {
        Ok(self.get(grammar)?.tokenize(text))
    }
}

impl Default for GrammarRegistry {
    fn default() -> Self {
        let mut registry = GrammarRegistry::empty();
        registry.register(Arc::new(CFamily));
        registry
    }
}

/// Tokenizes with the built-in registry.
pub fn tokenize(text: &str, grammar: &str) -> Result<Vec<RawToken>, TokenizeError> {
    static BUILTIN: OnceLock<GrammarRegistry> = OnceLock::new();
    BUILTIN
        .get_or_init(GrammarRegistry::default)
        .tokenize(text, grammar)
}

/// The Java reserved words.
pub const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

/// Multi-character operators, longest first so the first prefix match is
/// the maximal munch.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

pub struct CFamily;

impl Grammar for CFamily {
    fn name(&self) -> &str {
        "c-family"
    }

    fn tokenize(&self, text: &str) -> Vec<RawToken> {
        Lexer::new(text).run()
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    tokens: Vec<RawToken>,
}

impl Lexer {
    fn new(text: &str) -> Self {
        Lexer {
            chars: text.chars().collect(),
            pos: 0,
            line: 0,
            col: 0,
            tokens: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) {
        if self.chars[self.pos] == '\n' {
            self.line += 1;
            self.col = 0;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn bump_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek(0).is_some_and(&pred) {
            self.bump();
        }
    }

    fn run(mut self) -> Vec<RawToken> {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let (start, line, col) = (self.pos, self.line, self.col);
            let (kind, unterminated) = self.lex_one(c);
            let text: String = self.chars[start..self.pos].iter().collect();
            let kind = match kind {
                TokenKind::Identifier if KEYWORDS.contains(&text.as_str()) => TokenKind::Keyword,
                k => k,
            };
            self.tokens.push(RawToken {
                kind,
                text,
                span: CharRange::new(start, self.pos),
                line,
                col,
                unterminated,
            });
        }
        self.tokens
    }

    fn lex_one(&mut self, c: char) -> (TokenKind, bool) {
        match c {
            '/' if self.peek(1) == Some('/') => {
                self.bump_while(|c| c != '\n');
                (TokenKind::Comment, false)
            }
            '/' if self.peek(1) == Some('*') => {
                self.bump();
                self.bump();
                loop {
                    match self.peek(0) {
                        None => return (TokenKind::Comment, true),
                        Some('*') if self.peek(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            return (TokenKind::Comment, false);
                        }
                        Some(_) => self.bump(),
                    }
                }
            }
            '"' | '\'' => {
                self.bump();
                loop {
                    match self.peek(0) {
                        None => return (TokenKind::String, true),
                        Some('\\') => {
                            self.bump();
                            if self.peek(0).is_some() {
                                self.bump();
                            }
                        }
                        Some(q) if q == c => {
                            self.bump();
                            return (TokenKind::String, false);
                        }
                        Some(_) => self.bump(),
                    }
                }
            }
            c if c.is_ascii_digit() => {
                self.lex_number();
                (TokenKind::Number, false)
            }
            '.' if self.peek(1).is_some_and(|d| d.is_ascii_digit()) => {
                self.lex_number();
                (TokenKind::Number, false)
            }
            c if is_ident_start(c) => {
                self.bump_while(is_ident_continue);
                (TokenKind::Identifier, false)
            }
            _ => {
                let rest = &self.chars[self.pos..];
                let width = OPERATORS
                    .iter()
                    .find(|op| {
                        let n = op.chars().count();
                        rest.len() >= n && op.chars().eq(rest[..n].iter().copied())
                    })
                    .map_or(1, |op| op.chars().count());
                for _ in 0..width {
                    self.bump();
                }
                (TokenKind::Punct, false)
            }
        }
    }

    fn lex_number(&mut self) {
        let digit = |c: char| c.is_ascii_digit() || c == '_';
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X' | 'b' | 'B')) {
            self.bump();
            self.bump();
            self.bump_while(is_ident_continue);
            return;
        }
        self.bump_while(digit);
        if self.peek(0) == Some('.')
            && self
                .peek(1)
                .is_none_or(|c| !is_ident_start(c) || c == 'e' || c == 'E')
        {
            self.bump();
            self.bump_while(digit);
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let signed = matches!(self.peek(1), Some('+' | '-'));
            let first_digit = if signed { self.peek(2) } else { self.peek(1) };
            if first_digit.is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                if signed {
                    self.bump();
                }
                self.bump_while(digit);
            }
        }
        self.bump_while(is_ident_continue);
    }
}
