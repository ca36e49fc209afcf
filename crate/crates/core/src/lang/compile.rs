//! The compile phase: lex, parse, then resolve names and builtin arities.
//!
//! Scoping rules: `let` introduces a binding visible until the end of the
//! enclosing block. Functions are hoisted, may only be declared at top level,
//! and see their parameters, their own locals and other functions, but not
//! top-level variables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use super::ast::*;
use super::builtins;
use super::diagnostic::{has_errors, sort_diagnostics, Diagnostic};
use super::lexer::lex;
use super::parser::parse;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compilation {
    pub diagnostics: Vec<Diagnostic>,
    /// Present only when `diagnostics` holds no errors.
    pub tree: Option<SyntaxTree>,
}

impl Compilation {
    pub fn has_errors(&self) -> bool {
        has_errors(&self.diagnostics)
    }
}

pub fn compile(text: &str) -> Compilation {
    let (tokens, mut diagnostics) = lex(text);
    let (tree, parse_diags) = parse(text, &tokens);
    diagnostics.extend(parse_diags);
    diagnostics.extend(resolve(&tree));
    sort_diagnostics(&mut diagnostics);
    let tree = (!has_errors(&diagnostics)).then_some(tree);
    Compilation { diagnostics, tree }
}

fn resolve(tree: &SyntaxTree) -> Vec<Diagnostic> {
    let mut functions = BTreeMap::new();
    let mut diags = Vec::new();
    for stmt in &tree.program {
        if let StmtKind::Fn(def) = &stmt.kind {
            if builtins::lookup(&def.name.name).is_some() {
                diags.push(Diagnostic::error(
                    "P012",
                    format!("`{}` is a builtin and cannot be redefined", def.name.name),
                    def.name.span,
                ));
            } else if functions
                .insert(def.name.name.as_str(), def.params.len())
                .is_some()
            {
                diags.push(Diagnostic::error(
                    "P013",
                    format!("function `{}` is defined more than once", def.name.name),
                    def.name.span,
                ));
            }
        }
    }
    let mut resolver = Resolver {
        functions,
        scopes: Vec::new(),
        diags,
    };
    resolver.scopes.push(Vec::new());
    resolver.stmts(&tree.program);
    resolver.diags
}

struct Resolver<'a> {
    functions: BTreeMap<&'a str, usize>,
    scopes: Vec<Vec<&'a str>>,
    diags: Vec<Diagnostic>,
}

impl<'a> Resolver<'a> {
    fn is_bound(&self, name: &str) -> bool {
        self.scopes.iter().rev().any(|s| s.contains(&name))
    }

    fn declare(&mut self, name: &'a str) {
        if let Some(scope) = self.scopes.last_mut() {
            scope.push(name);
        }
    }

    fn unresolved(&mut self, name: &str, span: crate::lang::Span) {
        let message = if self.functions.contains_key(name) || builtins::lookup(name).is_some() {
            format!("`{name}` is a function, not a value")
        } else {
            format!("cannot find `{name}` in this scope")
        };
        self.diags.push(Diagnostic::error("P010", message, span));
    }

    fn stmts(&mut self, stmts: &'a [Stmt]) {
        let mut returned = false;
        for stmt in stmts {
            if returned {
                self.diags.push(Diagnostic::warning(
                    "P020",
                    "unreachable statement after `return`",
                    stmt.span,
                ));
                returned = false;
            }
            self.stmt(stmt);
            if matches!(stmt.kind, StmtKind::Return(_)) {
                returned = true;
            }
        }
    }

    fn block(&mut self, block: &'a Block) {
        self.scopes.push(Vec::new());
        self.stmts(&block.stmts);
        self.scopes.pop();
    }

    fn stmt(&mut self, stmt: &'a Stmt) {
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                self.expr(value);
                self.declare(&name.name);
            }
            StmtKind::Assign { name, value } => {
                self.expr(value);
                if !self.is_bound(&name.name) {
                    self.unresolved(&name.name, name.span);
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => {
                self.expr(cond);
                self.block(then_block);
                match else_branch {
                    Some(ElseBranch::Block(b)) => self.block(b),
                    Some(ElseBranch::If(s)) => self.stmt(s),
                    None => {}
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond);
                self.block(body);
            }
            StmtKind::Fn(def) => {
                let saved = core::mem::take(&mut self.scopes);
                let mut params: Vec<&str> = Vec::new();
                for p in &def.params {
                    if params.contains(&p.name.as_str()) {
                        self.diags.push(Diagnostic::error(
                            "P015",
                            format!("parameter `{}` is declared twice", p.name),
                            p.span,
                        ));
                    }
                    params.push(&p.name);
                }
                self.scopes.push(params);
                self.block(&def.body);
                self.scopes = saved;
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
        }
    }

    fn expr(&mut self, expr: &'a Expr) {
        match &expr.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str { .. } => {}
            ExprKind::Var(name) => {
                if !self.is_bound(name) {
                    self.unresolved(name, expr.span);
                }
            }
            ExprKind::Call { callee, args } => {
                for a in args {
                    self.expr(a);
                }
                let expected = match builtins::lookup(&callee.name) {
                    Some(b) => Some(b.arity),
                    None => self.functions.get(callee.name.as_str()).copied(),
                };
                match expected {
                    None => self.diags.push(Diagnostic::error(
                        "P010",
                        format!("cannot find function `{}`", callee.name),
                        callee.span,
                    )),
                    Some(n) if n != args.len() => self.diags.push(Diagnostic::error(
                        "P011",
                        format!(
                            "`{}` takes {} argument{} but {} were supplied",
                            callee.name,
                            n,
                            if n == 1 { "" } else { "s" },
                            args.len()
                        ),
                        expr.span,
                    )),
                    Some(_) => {}
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Unary { operand, .. } => self.expr(operand),
            ExprKind::If {
                cond,
                then_expr,
                else_expr,
            } => {
                self.expr(cond);
                self.expr(then_expr);
                self.expr(else_expr);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    pub(crate) const FACTORIAL: &str = "\
fn factorial(n) {
    if (n <= 1) { return 1; }
    return n * factorial(n - 1);
}
let result = factorial(5);
print(result);
return factorial(5);
";

    fn codes(text: &str) -> Vec<String> {
        compile(text)
            .diagnostics
            .into_iter()
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn factorial_compiles_clean() {
        let c = compile(FACTORIAL);
        assert!(c.diagnostics.is_empty(), "{:?}", c.diagnostics);
        assert!(c.tree.is_some());
    }

    #[test]
    fn retrn_is_an_error_at_line_one() {
        let c = compile("retrn 1;");
        assert!(c.has_errors());
        assert!(c.tree.is_none());
        assert!(c.diagnostics.iter().all(|d| d.span.line == 1));
        assert!(c.diagnostics.iter().any(|d| d.message.contains("`1`")));
    }

    #[test]
    fn unresolved_identifier() {
        assert_eq!(codes("print(undefined_name);"), ["P010"]);
        assert_eq!(codes("x = 1;"), ["P010"]);
        assert_eq!(codes("nope(1);"), ["P010"]);
    }

    #[test]
    fn builtin_arity() {
        assert_eq!(codes("print(1, 2);"), ["P011"]);
        assert_eq!(codes("nl(1);"), ["P011"]);
        assert_eq!(codes("fn f(a) { } f();"), ["P011"]);
    }

    #[test]
    fn scoping() {
        assert!(codes("let a = 1; if (true) { let b = a; } ").is_empty());
        assert_eq!(codes("if (true) { let b = 1; } print(b);"), ["P010"]);
        // functions do not capture top-level variables
        assert_eq!(codes("let g = 1; fn f() { return g; }"), ["P010"]);
        // but are hoisted
        assert!(codes("print(f()); fn f() { return 1; }").is_empty());
    }

    #[test]
    fn function_definition_errors() {
        assert_eq!(codes("fn print(x) { }"), ["P012"]);
        assert_eq!(codes("fn f() { } fn f() { }"), ["P013"]);
        assert_eq!(codes("fn f(a, a) { }"), ["P015"]);
    }

    #[test]
    fn unreachable_is_only_a_warning() {
        let c = compile("return 1; print(2);");
        assert_eq!(c.diagnostics.len(), 1);
        assert_eq!(c.diagnostics[0].code, "P020");
        assert!(c.tree.is_some());
    }

    #[test]
    fn deterministic() {
        let text = "let = ; @ retrn 1; print(q)";
        assert_eq!(compile(text), compile(text));
    }
}
