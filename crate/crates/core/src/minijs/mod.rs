//! MiniJS: the JavaScript subset the detectors analyze.
//!
//! Statements: `var`/`let`/`const`, function declarations, `if`/`else`,
//! `return`, blocks and expression statements. Expressions cover calls,
//! members, object/array literals, function and arrow expressions, the
//! conditional operator, `&&`/`||`, comparisons, `in`, arithmetic, unary
//! `!`/`-`/`typeof`/`void`, assignment and the comma operator.
//!
//! There is no automatic semicolon insertion: a statement must end with `;`
//! unless it is followed by `}` or the end of input.

mod ast;
mod lexer;
mod parser;
mod print;

use std::fmt;
use std::sync::Arc;

pub use ast::{
    expression_leaves, walk, BinaryOp, DeclKind, LogicalOp, Node, NodeId, NodeKind, UnaryOp,
};
pub use lexer::{decode_string, tokenize, Token, TokenKind, KEYWORDS};
pub use parser::parse;
pub use print::print;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub start_line: u32,
    pub start_col: u32,
    /// Position just past the last character.
    pub end_line: u32,
    pub end_col: u32,
    /// Byte offsets into the source, `lo..hi`.
    pub lo: u32,
    pub hi: u32,
}

impl SourceSpan {
    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn to(&self, end: &SourceSpan) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: end.end_line,
            end_col: end.end_col,
            lo: self.lo,
            hi: end.hi,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnterminatedString,
    UnterminatedComment,
    IllegalChar,
    UnexpectedToken,
    UnexpectedEof,
    /// A JavaScript construct outside the MiniJS subset.
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
    pub expected: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        if let Some(exp) = &self.expected {
            write!(f, " (expected {exp})")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
