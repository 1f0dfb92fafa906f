use std::sync::Arc;

use super::{ParseError, ParseErrorKind, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    StringLit,
    NumberLit,
    BoolLit,
    NullLit,
    Punct,
    Keyword,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Raw lexeme as it appears in the source.
    pub text: String,
    pub span: SourceSpan,
}

impl Token {
    /// Decoded value of a string literal token.
    pub fn string_value(&self) -> Option<String> {
        if self.kind != TokenKind::StringLit {
            return None;
        }
        decode_string(&self.text)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == k
    }
}

pub const KEYWORDS: &[&str] = &[
    "var", "let", "const", "function", "if", "else", "return", "this", "in", "typeof", "void",
    // reserved and rejected by the parser
    "class", "new", "for", "while", "do", "switch", "case", "break", "continue", "throw", "try",
    "catch", "finally", "delete", "instanceof", "yield", "async", "await", "import", "export",
    "extends", "super", "with", "debugger", "default",
];

// Longest first so greedy matching works.
const PUNCTS: &[&str] = &[
    "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "=>", "{", "}", "(", ")", "[", "]", ";",
    ",", ".", "?", ":", "=", "!", "+", "-", "*", "/", "%", "<", ">",
];

struct Lexer<'s> {
    src: &'s str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    col: u32,
}

#[derive(Clone, Copy)]
struct Mark {
    pos: usize,
    line: u32,
    col: u32,
}

impl<'s> Lexer<'s> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> Mark {
        Mark {
            pos: self.pos,
            line: self.line,
            col: self.col,
        }
    }

    fn span_from(&self, m: Mark) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start_line: m.line,
            start_col: m.col,
            end_line: self.line,
            end_col: self.col,
            lo: m.pos as u32,
            hi: self.pos as u32,
        }
    }

    fn error(&self, m: Mark, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            message: message.into(),
            span: self.span_from(m),
            expected: None,
        }
    }

    /// Skips whitespace and comments.
    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(), self.peek2()) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let m = self.mark();
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => {
                                return Err(self.error(
                                    m,
                                    ParseErrorKind::UnterminatedComment,
                                    "unterminated block comment",
                                ))
                            }
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn string(&mut self, quote: char) -> Result<(), ParseError> {
        let m = self.mark();
        self.bump();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.error(
                        m,
                        ParseErrorKind::UnterminatedString,
                        "unterminated string literal",
                    ))
                }
                Some('\\') => {
                    if self.bump().is_none() {
                        return Err(self.error(
                            m,
                            ParseErrorKind::UnterminatedString,
                            "unterminated string literal",
                        ));
                    }
                }
                Some(c) if c == quote => return Ok(()),
                Some(_) => {}
            }
        }
    }

    fn number(&mut self) {
        if self.peek() == Some('0') && matches!(self.peek2(), Some('x' | 'X')) {
            self.bump();
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_hexdigit()) {
                self.bump();
            }
            return;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = (self.pos, self.line, self.col);
            self.bump();
            if matches!(self.peek(), Some('+' | '-')) {
                self.bump();
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                (self.pos, self.line, self.col) = save;
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

pub fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src: source,
        file: Arc::from(file),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia()?;
        let Some(c) = lx.peek() else { break };
        let m = lx.mark();
        let kind = if c == '"' || c == '\'' {
            lx.string(c)?;
            TokenKind::StringLit
        } else if c.is_ascii_digit() || (c == '.' && lx.peek2().is_some_and(|d| d.is_ascii_digit())) {
            lx.number();
            TokenKind::NumberLit
        } else if is_ident_start(c) {
            while lx.peek().is_some_and(is_ident_part) {
                lx.bump();
            }
            match &source[m.pos..lx.pos] {
                "true" | "false" => TokenKind::BoolLit,
                "null" => TokenKind::NullLit,
                w if KEYWORDS.contains(&w) => TokenKind::Keyword,
                _ => TokenKind::Identifier,
            }
        } else if let Some(p) = PUNCTS.iter().find(|p| source[lx.pos..].starts_with(**p)) {
            for _ in 0..p.len() {
                lx.bump();
            }
            TokenKind::Punct
        } else {
            lx.bump();
            return Err(lx.error(
                m,
                ParseErrorKind::IllegalChar,
                format!("illegal character {c:?}"),
            ));
        };
        out.push(Token {
            kind,
            text: source[m.pos..lx.pos].to_owned(),
            span: lx.span_from(m),
        });
    }
    Ok(out)
}

/// Decodes a quoted string literal lexeme (including its quotes).
pub fn decode_string(raw: &str) -> Option<String> {
    let inner = raw.get(1..raw.len().checked_sub(1)?)?;
    let mut out = String::with_capacity(inner.len());
    let mut it = inner.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next()? {
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'b' => out.push('\u{8}'),
            'f' => out.push('\u{c}'),
            'v' => out.push('\u{b}'),
            '0' => out.push('\0'),
            '\n' => {}
            'x' => {
                let h: String = it.by_ref().take(2).collect();
                out.push(char::from_u32(u32::from_str_radix(&h, 16).ok()?)?);
            }
            'u' => {
                let h: String = it.by_ref().take(4).collect();
                let hi = u32::from_str_radix(&h, 16).ok()?;
                if (0xD800..0xDC00).contains(&hi) {
                    // surrogate pair as emitted by JSON-style escapers
                    let rest: String = it.by_ref().take(6).collect();
                    let lo = rest
                        .strip_prefix("\\u")
                        .and_then(|l| u32::from_str_radix(l, 16).ok())?;
                    let cp = 0x10000 + ((hi - 0xD800) << 10) + (lo - 0xDC00);
                    out.push(char::from_u32(cp)?);
                } else {
                    out.push(char::from_u32(hi).unwrap_or('\u{FFFD}'));
                }
            }
            other => out.push(other),
        }
    }
    Some(out)
}
