//! The experiment language: lexer, parser, pretty-printer, interpreter and
//! result tables.

mod ast;
mod interp;
mod lexer;
mod parser;
mod print;
mod table;

use std::fmt;

pub use ast::*;
pub use interp::{run_script, AssertFailure, RunConfig, RunOutcome, DEFAULT_TOL, SIZE_CAP};
pub use parser::{parse_named, parse_script};
pub use print::pretty_print;
pub use table::{emit_results, format_float, ResultTable, Row, TableMetadata};

/// Built-in demo scripts, by name.
pub const DEMOS: &[(&str, &str)] = &[
    ("chsh", include_str!("../../demos/chsh.duoc")),
    ("activation", include_str!("../../demos/activation.duoc")),
    ("witness", include_str!("../../demos/witness.duoc")),
    ("purify", include_str!("../../demos/purify.duoc")),
    ("consistency", include_str!("../../demos/consistency.duoc")),
    ("span", include_str!("../../demos/span.duoc")),
];

pub fn demo(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DslErrorKind {
    Lex,
    Syntax,
    Undefined,
    /// Raised while executing a statement.
    Domain,
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DslError {
    pub kind: DslErrorKind,
    pub span: Option<Span>,
    pub message: String,
}

impl DslError {
    fn new(kind: DslErrorKind, span: Option<Span>, message: impl Into<String>) -> Self {
        Self {
            kind,
            span,
            message: message.into(),
        }
    }

    pub(crate) fn lex(span: Span, message: impl Into<String>) -> Self {
        Self::new(DslErrorKind::Lex, Some(span), message)
    }

    pub(crate) fn syntax(span: Span, message: impl Into<String>) -> Self {
        Self::new(DslErrorKind::Syntax, Some(span), message)
    }

    pub(crate) fn undefined(span: Span, message: impl Into<String>) -> Self {
        Self::new(DslErrorKind::Undefined, Some(span), message)
    }

    pub(crate) fn domain(span: Span, message: impl Into<String>) -> Self {
        Self::new(DslErrorKind::Domain, Some(span), message)
    }

    pub(crate) fn io(message: impl Into<String>) -> Self {
        Self::new(DslErrorKind::Io, None, message)
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for DslError {}
