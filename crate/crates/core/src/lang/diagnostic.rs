use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

/// A positioned message from the parser (`P###`), an analyzer (`A###`) or the
/// runtime (`R###`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub message: String,
    pub span: Span,
    pub fixable: bool,
}

impl Diagnostic {
    pub fn new(code: &str, severity: Severity, message: impl Into<String>, span: Span) -> Self {
        debug_assert!(is_valid_code(code), "bad diagnostic code {code}");
        Diagnostic {
            code: code.into(),
            severity,
            message: message.into(),
            span,
            fixable: false,
        }
    }

    pub fn error(code: &str, message: impl Into<String>, span: Span) -> Self {
        Self::new(code, Severity::Error, message, span)
    }

    pub fn warning(code: &str, message: impl Into<String>, span: Span) -> Self {
        Self::new(code, Severity::Warning, message, span)
    }

    pub fn fixable(mut self, fixable: bool) -> Self {
        self.fixable = fixable;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `[PAR][0-9]{3}`
pub fn is_valid_code(code: &str) -> bool {
    let b = code.as_bytes();
    b.len() == 4 && matches!(b[0], b'P' | b'A' | b'R') && b[1..].iter().all(u8::is_ascii_digit)
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Sort key used everywhere diagnostics are listed.
pub(crate) fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        (a.span.start, a.span.end, &a.code, &a.message).cmp(&(
            b.span.start,
            b.span.end,
            &b.code,
            &b.message,
        ))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_shape() {
        assert!(is_valid_code("P001"));
        assert!(is_valid_code("A003"));
        assert!(is_valid_code("R100"));
        assert!(!is_valid_code("X001"));
        assert!(!is_valid_code("P01"));
        assert!(!is_valid_code("P0a1"));
    }
}
