//! Syntax-tree analyzers and the code fixes they offer.
//!
//! Rules subscribe to [`SyntaxKind`]s and are only ever shown nodes of those
//! kinds. Fixes are plain text edits; [`apply_fix`] rewrites a document.

mod fix;
mod rules;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::lang::ast::{Node, SyntaxKind, SyntaxTree};
use crate::lang::{compile, sort_diagnostics, Diagnostic, Severity};

pub use fix::{apply_fix, fix_all, fixes_for, CodeFix, FixError, FixResult, TextEdit};
pub use rules::{IgnoredPureResult, NewlineLiteral, Sha1Call, NEWLINE_FIX_TITLE, SHA512_FIX_TITLE};

pub trait AnalyzerRule: Send + Sync {
    /// `A###`.
    fn code(&self) -> &'static str;
    fn severity(&self) -> Severity;
    fn node_kinds(&self) -> &[SyntaxKind];
    fn check(&self, node: Node<'_>, text: &str) -> Option<Diagnostic>;
}

/// A set of rules indexed by the node kinds they subscribe to.
pub struct Analyzer {
    rules: Vec<Box<dyn AnalyzerRule>>,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Analyzer {
    pub fn new(rules: Vec<Box<dyn AnalyzerRule>>) -> Self {
        Analyzer { rules }
    }

    /// A001, A002 (warning) and A003.
    pub fn builtin() -> Self {
        Self::with_sha1_severity(Severity::Warning)
    }

    pub fn with_sha1_severity(severity: Severity) -> Self {
        Analyzer::new(alloc::vec![
            Box::new(NewlineLiteral),
            Box::new(Sha1Call { severity }),
            Box::new(IgnoredPureResult),
        ])
    }

    pub fn rules(&self) -> &[Box<dyn AnalyzerRule>] {
        &self.rules
    }

    pub fn analyze(&self, tree: &SyntaxTree, text: &str) -> Vec<Diagnostic> {
        analyze(tree, text, &self.rules)
    }

    /// Compiles `text` and analyzes it. When compilation fails the compile
    /// diagnostics are returned instead, since there is no tree to inspect.
    pub fn analyze_text(&self, text: &str) -> Vec<Diagnostic> {
        let compilation = compile(text);
        match &compilation.tree {
            Some(tree) if !compilation.has_errors() => self.analyze(tree, text),
            _ => compilation.diagnostics,
        }
    }
}

/// Runs each rule on the nodes it subscribed to. Output is sorted by span,
/// then code.
pub fn analyze(tree: &SyntaxTree, text: &str, rules: &[Box<dyn AnalyzerRule>]) -> Vec<Diagnostic> {
    let mut by_kind: BTreeMap<SyntaxKind, Vec<&dyn AnalyzerRule>> = BTreeMap::new();
    for rule in rules {
        for &kind in rule.node_kinds() {
            by_kind.entry(kind).or_default().push(rule.as_ref());
        }
    }
    let mut out = Vec::new();
    tree.walk(&mut |node| {
        if let Some(subscribed) = by_kind.get(&node.kind()) {
            out.extend(subscribed.iter().filter_map(|r| r.check(node, text)));
        }
    });
    sort_diagnostics(&mut out);
    out
}
