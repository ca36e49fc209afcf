//! Tokenizer for BenchScript.
//!
//! The lexer never fails: unknown characters and malformed literals become
//! diagnostics and scanning resumes after them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::diagnostic::Diagnostic;
use super::span::{LineIndex, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Int(i64),
    /// `raw` is the text between the quotes exactly as typed, `cooked` has
    /// escapes resolved.
    Str {
        raw: String,
        cooked: String,
    },
    Ident(String),
    True,
    False,
    Let,
    If,
    Else,
    While,
    Fn,
    Return,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
}

impl TokenKind {
    /// Human-readable form used in parser messages.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Int(v) => format!("integer literal `{v}`"),
            TokenKind::Str { raw, .. } => format!("string literal `\"{raw}\"`"),
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            TokenKind::True => "true",
            TokenKind::False => "false",
            TokenKind::Let => "let",
            TokenKind::If => "if",
            TokenKind::Else => "else",
            TokenKind::While => "while",
            TokenKind::Fn => "fn",
            TokenKind::Return => "return",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::Comma => ",",
            TokenKind::Semi => ";",
            TokenKind::Assign => "=",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Slash => "/",
            TokenKind::Percent => "%",
            TokenKind::EqEq => "==",
            TokenKind::NotEq => "!=",
            TokenKind::Lt => "<",
            TokenKind::Le => "<=",
            TokenKind::Gt => ">",
            TokenKind::Ge => ">=",
            TokenKind::AndAnd => "&&",
            TokenKind::OrOr => "||",
            TokenKind::Bang => "!",
            TokenKind::Int(_) | TokenKind::Str { .. } | TokenKind::Ident(_) => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut lexer = Lexer {
        text,
        index: LineIndex::new(text),
        pos: 0,
        tokens: Vec::new(),
        diags: Vec::new(),
    };
    lexer.run();
    (lexer.tokens, lexer.diags)
}

struct Lexer<'a> {
    text: &'a str,
    index: LineIndex<'a>,
    pos: usize,
    tokens: Vec<Token>,
    diags: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_at(&self, ahead: usize) -> Option<char> {
        self.text[self.pos..].chars().nth(ahead)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let span = self.index.span(start, self.pos);
        self.tokens.push(Token { kind, span });
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '"' => self.string(),
                c if c.is_ascii_digit() => self.number(),
                c if c == '_' || c.is_ascii_alphabetic() => self.word(),
                _ => {
                    self.bump();
                    let two = |l: &mut Self, next: char, yes: TokenKind, no: Option<TokenKind>| {
                        if l.peek() == Some(next) {
                            l.bump();
                            Some(yes)
                        } else {
                            no
                        }
                    };
                    let kind = match c {
                        '(' => Some(TokenKind::LParen),
                        ')' => Some(TokenKind::RParen),
                        '{' => Some(TokenKind::LBrace),
                        '}' => Some(TokenKind::RBrace),
                        ',' => Some(TokenKind::Comma),
                        ';' => Some(TokenKind::Semi),
                        '+' => Some(TokenKind::Plus),
                        '-' => Some(TokenKind::Minus),
                        '*' => Some(TokenKind::Star),
                        '/' => Some(TokenKind::Slash),
                        '%' => Some(TokenKind::Percent),
                        '=' => two(self, '=', TokenKind::EqEq, Some(TokenKind::Assign)),
                        '!' => two(self, '=', TokenKind::NotEq, Some(TokenKind::Bang)),
                        '<' => two(self, '=', TokenKind::Le, Some(TokenKind::Lt)),
                        '>' => two(self, '=', TokenKind::Ge, Some(TokenKind::Gt)),
                        '&' => two(self, '&', TokenKind::AndAnd, None),
                        '|' => two(self, '|', TokenKind::OrOr, None),
                        _ => None,
                    };
                    match kind {
                        Some(kind) => self.push(kind, start),
                        None => {
                            let span = self.index.span(start, self.pos);
                            self.diags.push(Diagnostic::error(
                                "P001",
                                format!("unexpected character `{c}`"),
                                span,
                            ));
                        }
                    }
                }
            }
        }
    }

    fn word(&mut self) {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '_' || c.is_ascii_alphanumeric() {
                self.bump();
            } else {
                break;
            }
        }
        let word = &self.text[start..self.pos];
        let kind = match word {
            "let" => TokenKind::Let,
            "if" => TokenKind::If,
            "else" => TokenKind::Else,
            "while" => TokenKind::While,
            "fn" => TokenKind::Fn,
            "return" => TokenKind::Return,
            "true" => TokenKind::True,
            "false" => TokenKind::False,
            _ => TokenKind::Ident(word.into()),
        };
        self.push(kind, start);
    }

    fn number(&mut self) {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        let digits = &self.text[start..self.pos];
        let value = match digits.parse::<i64>() {
            Ok(v) => v,
            Err(_) => {
                self.diags.push(Diagnostic::error(
                    "P005",
                    format!("integer literal `{digits}` does not fit in 64 bits"),
                    self.index.span(start, self.pos),
                ));
                0
            }
        };
        self.push(TokenKind::Int(value), start);
    }

    fn string(&mut self) {
        let start = self.pos;
        self.bump();
        let body_start = self.pos;
        let mut terminated = false;
        while let Some(c) = self.peek() {
            match c {
                '"' => {
                    terminated = true;
                    break;
                }
                '\n' => break,
                '\\' => {
                    self.bump();
                    if matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                _ => {
                    self.bump();
                }
            }
        }
        let raw = &self.text[body_start..self.pos];
        if terminated {
            self.bump();
        } else {
            self.diags.push(Diagnostic::error(
                "P003",
                "unterminated string literal",
                self.index.span(start, self.pos),
            ));
        }
        let cooked = match unescape(raw) {
            Ok(cooked) => cooked,
            Err(err) => {
                let at = body_start + err.offset;
                let end = at + raw[err.offset..].chars().next().map_or(0, char::len_utf8);
                self.diags.push(Diagnostic::error(
                    "P004",
                    err.message,
                    self.index.span(at, end.max(at)),
                ));
                String::new()
            }
        };
        self.push(
            TokenKind::Str {
                raw: raw.into(),
                cooked,
            },
            start,
        );
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscapeError {
    /// Byte offset into the raw literal body.
    pub offset: usize,
    pub message: String,
}

/// Resolves `\n`, `\t`, `\\` and `\"`. Raw control characters are rejected so
/// that [`escape`] is an exact inverse on lexer-accepted input.
pub fn unescape(raw: &str) -> Result<String, EscapeError> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, 'n')) => out.push('\n'),
                Some((_, 't')) => out.push('\t'),
                Some((_, '\\')) => out.push('\\'),
                Some((_, '"')) => out.push('"'),
                Some((_, other)) => {
                    return Err(EscapeError {
                        offset: i,
                        message: format!("unknown escape sequence `\\{other}`"),
                    })
                }
                None => {
                    return Err(EscapeError {
                        offset: i,
                        message: "dangling backslash in string literal".into(),
                    })
                }
            },
            '"' => {
                return Err(EscapeError {
                    offset: i,
                    message: "unescaped quote in string literal".into(),
                })
            }
            c if c.is_control() => {
                return Err(EscapeError {
                    offset: i,
                    message: format!("control character U+{:04X} in string literal", c as u32),
                })
            }
            c => out.push(c),
        }
    }
    Ok(out)
}

/// Inverse of [`unescape`]: produces the body of a string literal.
pub fn escape(cooked: &str) -> String {
    let mut out = String::with_capacity(cooked.len() + 2);
    for c in cooked.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out
}
