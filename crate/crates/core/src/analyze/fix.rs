use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rules::{NEWLINE_FIX_TITLE, SHA512_FIX_TITLE};
use super::Analyzer;
use crate::lang::ast::{BinaryOp, ExprKind, Node, SyntaxTree};
use crate::lang::{compile, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEdit {
    pub span: Span,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeFix {
    pub diagnostic_code: String,
    pub title: String,
    /// Non-overlapping, sorted by start.
    pub edits: Vec<TextEdit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixResult {
    pub new_text: String,
    pub applied: CodeFix,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum FixError {
    #[error("edits overlap at byte {0}")]
    OverlappingEdits(usize),
    #[error("edit span {start}..{end} is outside the text or splits a character")]
    SpanOutOfRange { start: usize, end: usize },
}

/// Fixes offered for `diag`, which must have been produced from `text`.
pub fn fixes_for(diag: &Diagnostic, text: &str) -> Vec<CodeFix> {
    let compilation = compile(text);
    let Some(tree) = compilation.tree else {
        return Vec::new();
    };
    let fix = match diag.code.as_str() {
        "A001" => newline_fix(diag.span, text, &tree),
        "A002" => sha512_fix(diag.span, &tree),
        _ => None,
    };
    fix.into_iter().collect()
}

fn newline_fix(span: Span, text: &str, tree: &SyntaxTree) -> Option<CodeFix> {
    let literal = text.get(span.start..span.end)?;
    let raw = literal.strip_prefix('"')?.strip_suffix('"')?;
    let mut parts: Vec<String> = Vec::new();
    let mut segment = String::new();
    let mut chars = raw.chars();
    let mut found = false;
    while let Some(c) = chars.next() {
        if c != '\\' {
            segment.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => {
                found = true;
                if !segment.is_empty() {
                    parts.push(quote(&segment));
                    segment.clear();
                }
                parts.push("nl()".to_string());
            }
            Some(other) => {
                segment.push('\\');
                segment.push(other);
            }
            None => return None,
        }
    }
    if !found {
        return None;
    }
    if !segment.is_empty() {
        parts.push(quote(&segment));
    }
    let mut replacement = parts.join(" + ");
    if parts.len() > 1 && binds_tighter_than_plus(tree, span) {
        replacement = ["(", &replacement, ")"].concat();
    }
    Some(CodeFix {
        diagnostic_code: "A001".into(),
        title: NEWLINE_FIX_TITLE.into(),
        edits: alloc::vec![TextEdit { span, replacement }],
    })
}

fn quote(raw: &str) -> String {
    ["\"", raw, "\""].concat()
}

/// Whether the expression at `span` is an operand of `*`, `/`, `%`, the right
/// side of `-`, or under a unary operator, where a bare `+` chain would regroup.
fn binds_tighter_than_plus(tree: &SyntaxTree, span: Span) -> bool {
    let mut found = false;
    tree.walk(&mut |node| {
        let Node::Expr(e) = node else { return };
        match &e.kind {
            ExprKind::Binary {
                op: BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem,
                lhs,
                rhs,
            } => found |= lhs.span == span || rhs.span == span,
            ExprKind::Binary {
                op: BinaryOp::Sub,
                rhs,
                ..
            } => found |= rhs.span == span,
            ExprKind::Unary { operand, .. } => found |= operand.span == span,
            _ => {}
        }
    });
    found
}

fn sha512_fix(span: Span, tree: &SyntaxTree) -> Option<CodeFix> {
    let mut callee_span = None;
    tree.walk(&mut |node| {
        if let Node::Expr(e) = node {
            if let ExprKind::Call { callee, .. } = &e.kind {
                if e.span == span && callee.name == "hash_sha1" {
                    callee_span = Some(callee.span);
                }
            }
        }
    });
    Some(CodeFix {
        diagnostic_code: "A002".into(),
        title: SHA512_FIX_TITLE.into(),
        edits: alloc::vec![TextEdit {
            span: callee_span?,
            replacement: "hash_sha512".into(),
        }],
    })
}

/// Applies all edits of `fix`, right to left, leaving every byte outside the
/// edit spans untouched.
pub fn apply_fix(text: &str, fix: &CodeFix) -> Result<FixResult, FixError> {
    let mut edits: Vec<&TextEdit> = fix.edits.iter().collect();
    edits.sort_by_key(|e| (e.span.start, e.span.end));
    for e in &edits {
        let (start, end) = (e.span.start, e.span.end);
        if start > end || text.get(start..end).is_none() {
            return Err(FixError::SpanOutOfRange { start, end });
        }
    }
    for pair in edits.windows(2) {
        let (a, b) = (pair[0].span, pair[1].span);
        if a.end > b.start || a.start == b.start {
            return Err(FixError::OverlappingEdits(b.start));
        }
    }
    let mut new_text = String::from(text);
    for e in edits.iter().rev() {
        new_text.replace_range(e.span.start..e.span.end, &e.replacement);
    }
    Ok(FixResult {
        new_text,
        applied: fix.clone(),
    })
}

/// Repeatedly applies the first offered fix until none remain.
pub fn fix_all(text: &str, analyzer: &Analyzer) -> (String, Vec<CodeFix>) {
    const MAX_ROUNDS: usize = 10_000;
    let mut current = String::from(text);
    let mut applied = Vec::new();
    for _ in 0..MAX_ROUNDS {
        let next = analyzer
            .analyze_text(&current)
            .iter()
            .filter(|d| d.fixable)
            .find_map(|d| fixes_for(d, &current).into_iter().next());
        let Some(fix) = next else { break };
        match apply_fix(&current, &fix) {
            Ok(result) => {
                current = result.new_text;
                applied.push(result.applied);
            }
            Err(_) => break,
        }
    }
    (current, applied)
}
