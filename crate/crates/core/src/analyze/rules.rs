use alloc::format;

use super::AnalyzerRule;
use crate::augment::SHA1_TOOLTIP;
use crate::lang::ast::{ExprKind, Node, StmtKind, SyntaxKind};
use crate::lang::builtins::is_pure;
use crate::lang::{Diagnostic, Severity};

pub const NEWLINE_FIX_TITLE: &str = "Replace with compatible newlines";
pub const SHA512_FIX_TITLE: &str = "Use hash_sha512";

/// A001: a string literal whose value contains a newline.
pub struct NewlineLiteral;

impl AnalyzerRule for NewlineLiteral {
    fn code(&self) -> &'static str {
        "A001"
    }

    fn severity(&self) -> Severity {
        Severity::Warning
    }

    fn node_kinds(&self) -> &[SyntaxKind] {
        &[SyntaxKind::StringLiteral]
    }

    fn check(&self, node: Node<'_>, _text: &str) -> Option<Diagnostic> {
        let Node::Expr(expr) = node else { return None };
        let ExprKind::Str { value, .. } = &expr.kind else {
            return None;
        };
        value.contains('\n').then(|| {
            Diagnostic::new(
                self.code(),
                self.severity(),
                "string literal contains a `\\n` escape; build line breaks with nl()",
                expr.span,
            )
            .fixable(true)
        })
    }
}

/// A002: a call to `hash_sha1`.
pub struct Sha1Call {
    pub severity: Severity,
}

impl AnalyzerRule for Sha1Call {
    fn code(&self) -> &'static str {
        "A002"
    }

    fn severity(&self) -> Severity {
        self.severity
    }

    fn node_kinds(&self) -> &[SyntaxKind] {
        &[SyntaxKind::CallExpression]
    }

    fn check(&self, node: Node<'_>, _text: &str) -> Option<Diagnostic> {
        let Node::Expr(expr) = node else { return None };
        match &expr.kind {
            ExprKind::Call { callee, .. } if callee.name == "hash_sha1" => Some(
                Diagnostic::new(self.code(), self.severity, SHA1_TOOLTIP, expr.span).fixable(true),
            ),
            _ => None,
        }
    }
}

/// A003: the result of a pure builtin is thrown away.
pub struct IgnoredPureResult;

impl AnalyzerRule for IgnoredPureResult {
    fn code(&self) -> &'static str {
        "A003"
    }

    fn severity(&self) -> Severity {
        Severity::Info
    }

    fn node_kinds(&self) -> &[SyntaxKind] {
        &[SyntaxKind::ExpressionStatement]
    }

    fn check(&self, node: Node<'_>, _text: &str) -> Option<Diagnostic> {
        let Node::Stmt(stmt) = node else { return None };
        let StmtKind::Expr(expr) = &stmt.kind else {
            return None;
        };
        match &expr.kind {
            ExprKind::Call { callee, .. } if is_pure(&callee.name) => Some(Diagnostic::new(
                self.code(),
                self.severity(),
                format!("the result of `{}` is ignored", callee.name),
                stmt.span,
            )),
            _ => None,
        }
    }
}
