//! PanScript frontend: lexing, parsing, validation and pretty-printing.

pub mod ast;
mod parser;
pub mod pretty;
pub mod token;
mod validate;

use std::fmt;

pub use ast::*;
pub use parser::parse_program;
pub use token::{tokenize, Keyword, Prim, Token, TokenKind};
pub use validate::{is_builtin, validate, BUILTINS};

use crate::error::FrontendError;

/// Byte range into the source text.
///
/// Spans compare equal regardless of position so that syntax trees can be
/// compared structurally (e.g. after a print/parse round trip).
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    /// 1-based line and column of the span start.
    pub fn line_col(&self, text: &str) -> (usize, usize) {
        let upto = &text[..self.start.min(text.len())];
        let line = upto.matches('\n').count() + 1;
        let col = upto.rfind('\n').map_or(upto.len(), |nl| upto.len() - nl - 1) + 1;
        (line, col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Renders as `path:line:col: severity: message`.
    pub fn render(&self, path: &str, text: &str) -> String {
        let (line, col) = self.span.line_col(text);
        format!("{path}:{line}:{col}: {self}")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

/// Tokenizes, parses and validates `text`. Validation errors are returned as
/// `FrontendError::Invalid`; warnings are dropped.
pub fn parse_source(path: &str, text: &str) -> Result<SourceProgram, FrontendError> {
    let tokens = tokenize(text)?;
    let mut program = parse_program(&tokens)?;
    program.path = path.to_string();
    program.text = text.to_string();
    let errors: Vec<_> = validate(&program).into_iter().filter(Diagnostic::is_error).collect();
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(FrontendError::Invalid(errors))
    }
}
