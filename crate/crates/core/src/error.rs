use std::fmt;

use thiserror::Error;

use crate::lang::{Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("lex error at {}: {message}", span.start)]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

impl LexError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        LexError { span, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at {}: {message}", span.start)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("compile error at {}: {message}", span.start)]
pub struct CompileError {
    pub span: Span,
    pub message: String,
}

/// A program-level error raised while evaluating PanScript code. `tag` is the
/// string that `protect(expr, "Tag")` matches against.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{tag}: {message}")]
pub struct RuntimeError {
    pub tag: String,
    pub message: String,
}

impl RuntimeError {
    pub fn new(tag: impl Into<String>, message: impl Into<String>) -> Self {
        RuntimeError { tag: tag.into(), message: message.into() }
    }

    pub fn type_error(message: impl Into<String>) -> Self {
        RuntimeError::new("TypeError", message)
    }
}

/// Everything that can go wrong turning source text into a compiled space.
#[derive(Debug, Clone, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", DiagList(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

struct DiagList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
