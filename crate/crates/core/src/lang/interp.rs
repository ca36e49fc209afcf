//! Tree-walking interpreter.
//!
//! Every statement and expression evaluation costs one step of fuel. Heap
//! accounting charges each bound value its [`Value::cells`] plus one cell per
//! active call frame; string results are checked against the budget before
//! they are materialized.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha1::Sha1;
use sha2::{Digest, Sha512};

use super::ast::*;
use super::builtins;
use super::compile::compile;
use super::diagnostic::Diagnostic;
use super::span::Span;
use super::value::{string_cells, Value};
use crate::sandbox::{normalize_path, Access, Capability, DenyReason, ExecutionPolicy, VirtualFs};

/// Maximum depth of nested user function calls.
pub const MAX_CALL_DEPTH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultKind {
    CapabilityDenied,
    AclDenied,
    IntegrityDenied,
    FuelExhausted,
    MemoryExceeded,
    OutputLimitExceeded,
    WallClockExceeded,
    RuntimeError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub kind: FaultKind,
    /// `R###` runtime code.
    pub code: String,
    pub message: String,
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub compile_diagnostics: Vec<Diagnostic>,
    pub console: String,
    pub return_value: Option<Value>,
    pub fault: Option<Fault>,
    pub steps_used: u64,
    pub wall_ms: u64,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.fault.is_none() && !super::diagnostic::has_errors(&self.compile_diagnostics)
    }
}

/// Source of elapsed wall time for the advisory time limit.
pub trait Clock {
    fn elapsed_ms(&self) -> u64;
}

/// A clock that never advances; runs are then bounded by fuel alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> u64 {
        0
    }
}

pub fn run(text: &str, policy: &ExecutionPolicy, world: &mut VirtualFs) -> RunReport {
    run_with_clock(text, policy, world, &NoClock)
}

pub fn run_with_clock(
    text: &str,
    policy: &ExecutionPolicy,
    world: &mut VirtualFs,
    clock: &dyn Clock,
) -> RunReport {
    let compilation = compile(text);
    let Some(tree) = compilation.tree else {
        return RunReport {
            compile_diagnostics: compilation.diagnostics,
            console: String::new(),
            return_value: None,
            fault: None,
            steps_used: 0,
            wall_ms: clock.elapsed_ms(),
        };
    };
    let mut functions = BTreeMap::new();
    for stmt in &tree.program {
        if let StmtKind::Fn(def) = &stmt.kind {
            functions.insert(def.name.name.as_str(), def);
        }
    }
    let mut interp = Interpreter {
        policy,
        world,
        clock,
        functions,
        frames: alloc::vec![Frame::new()],
        steps: 0,
        cells: 1,
        console: String::new(),
    };
    let (return_value, fault) = match interp.stmts(&tree.program) {
        Ok(()) => (None, None),
        Err(Flow::Return(v)) => (Some(v), None),
        Err(Flow::Fault(f)) => (None, Some(f)),
    };
    RunReport {
        compile_diagnostics: compilation.diagnostics,
        console: interp.console,
        return_value,
        fault,
        steps_used: interp.steps,
        wall_ms: clock.elapsed_ms(),
    }
}

enum Flow {
    Return(Value),
    Fault(Fault),
}

type Exec<T> = Result<T, Flow>;

fn fault<T>(kind: FaultKind, code: &str, message: impl Into<String>, span: Span) -> Exec<T> {
    Err(Flow::Fault(Fault {
        kind,
        code: code.into(),
        message: message.into(),
        span: Some(span),
    }))
}

fn runtime<T>(code: &str, message: impl Into<String>, span: Span) -> Exec<T> {
    fault(FaultKind::RuntimeError, code, message, span)
}

struct Frame<'a> {
    scopes: Vec<Vec<(&'a str, Value)>>,
}

impl<'a> Frame<'a> {
    fn new() -> Self {
        Frame {
            scopes: alloc::vec![Vec::new()],
        }
    }

    fn cells(&self) -> u64 {
        self.scopes
            .iter()
            .flatten()
            .map(|(_, v)| v.cells())
            .sum::<u64>()
    }
}

struct Interpreter<'a, 'w> {
    policy: &'w ExecutionPolicy,
    world: &'w mut VirtualFs,
    clock: &'w dyn Clock,
    functions: BTreeMap<&'a str, &'a FnDef>,
    frames: Vec<Frame<'a>>,
    steps: u64,
    cells: u64,
    console: String,
}

impl<'a, 'w> Interpreter<'a, 'w> {
    fn tick(&mut self, span: Span) -> Exec<()> {
        let limits = &self.policy.limits;
        if self.steps >= limits.max_steps {
            return fault(
                FaultKind::FuelExhausted,
                "R110",
                format!("step budget of {} exhausted", limits.max_steps),
                span,
            );
        }
        self.steps += 1;
        if self.clock.elapsed_ms() > limits.max_wall_ms {
            return fault(
                FaultKind::WallClockExceeded,
                "R113",
                format!("wall-clock budget of {} ms exceeded", limits.max_wall_ms),
                span,
            );
        }
        Ok(())
    }

    fn reserve(&self, cells: u64, span: Span) -> Exec<()> {
        let limit = self.policy.limits.max_heap_cells;
        if self.cells.saturating_add(cells) > limit {
            return fault(
                FaultKind::MemoryExceeded,
                "R111",
                format!("heap budget of {limit} cells exceeded"),
                span,
            );
        }
        Ok(())
    }

    /// Checks a string of `len` bytes would fit before building it.
    fn check_string(&self, len: usize, span: Span) -> Exec<()> {
        self.reserve(string_cells(len), span)
    }

    fn frame(&mut self) -> &mut Frame<'a> {
        self.frames.last_mut().expect("at least one frame")
    }

    fn bind(&mut self, name: &'a str, value: Value, span: Span) -> Exec<()> {
        let cost = value.cells();
        self.reserve(cost, span)?;
        self.cells += cost;
        self.frame()
            .scopes
            .last_mut()
            .expect("at least one scope")
            .push((name, value));
        Ok(())
    }

    fn assign(&mut self, name: &str, value: Value, span: Span) -> Exec<()> {
        let new_cost = value.cells();
        let frame = self.frames.last_mut().expect("frame");
        let slot = frame
            .scopes
            .iter_mut()
            .rev()
            .find_map(|s| s.iter_mut().rev().find(|(n, _)| *n == name))
            .map(|(_, v)| v);
        let Some(slot) = slot else {
            // Resolution guarantees this is unreachable for compiled trees.
            return runtime("R009", format!("unbound variable `{name}`"), span);
        };
        let old_cost = slot.cells();
        let next = self.cells - old_cost + new_cost;
        if next > self.policy.limits.max_heap_cells {
            return fault(
                FaultKind::MemoryExceeded,
                "R111",
                format!(
                    "heap budget of {} cells exceeded",
                    self.policy.limits.max_heap_cells
                ),
                span,
            );
        }
        *slot = value;
        self.cells = next;
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.frames
            .last()?
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.iter().rev().find(|(n, _)| *n == name))
            .map(|(_, v)| v)
    }

    fn pop_scope(&mut self) {
        if let Some(scope) = self.frame().scopes.pop() {
            let freed: u64 = scope.iter().map(|(_, v)| v.cells()).sum();
            self.cells -= freed;
        }
    }

    fn stmts(&mut self, stmts: &'a [Stmt]) -> Exec<()> {
        for stmt in stmts {
            self.stmt(stmt)?;
        }
        Ok(())
    }

    fn block(&mut self, block: &'a Block) -> Exec<()> {
        self.frame().scopes.push(Vec::new());
        self.stmts(&block.stmts)?;
        self.pop_scope();
        Ok(())
    }

    fn condition(&mut self, cond: &'a Expr, what: &str) -> Exec<bool> {
        match self.expr(cond)? {
            Value::Bool(b) => Ok(b),
            other => runtime(
                "R003",
                format!("{what} condition must be bool, found {}", other.type_name()),
                cond.span,
            ),
        }
    }

    fn stmt(&mut self, stmt: &'a Stmt) -> Exec<()> {
        self.tick(stmt.span)?;
        match &stmt.kind {
            StmtKind::Let { name, value } => {
                let v = self.expr(value)?;
                self.bind(&name.name, v, stmt.span)
            }
            StmtKind::Assign { name, value } => {
                let v = self.expr(value)?;
                self.assign(&name.name, v, stmt.span)
            }
            StmtKind::If {
                cond,
                then_block,
                else_branch,
            } => {
                if self.condition(cond, "`if`")? {
                    self.block(then_block)
                } else {
                    match else_branch {
                        Some(ElseBranch::Block(b)) => self.block(b),
                        Some(ElseBranch::If(s)) => self.stmt(s),
                        None => Ok(()),
                    }
                }
            }
            StmtKind::While { cond, body } => {
                while self.condition(cond, "`while`")? {
                    self.block(body)?;
                }
                Ok(())
            }
            StmtKind::Fn(_) => Ok(()),
            StmtKind::Expr(e) => self.expr(e).map(drop),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(e)?,
                    None => Value::Unit,
                };
                Err(Flow::Return(v))
            }
        }
    }

    fn expr(&mut self, expr: &'a Expr) -> Exec<Value> {
        self.tick(expr.span)?;
        let span = expr.span;
        match &expr.kind {
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Str { value, .. } => {
                self.check_string(value.len(), span)?;
                Ok(Value::Str(value.clone()))
            }
            ExprKind::Var(name) => match self.lookup(name) {
                Some(v) => Ok(v.clone()),
                None => runtime("R009", format!("unbound variable `{name}`"), span),
            },
            ExprKind::Unary { op, operand } => {
                let v = self.expr(operand)?;
                match (op, v) {
                    (UnaryOp::Neg, Value::Int(i)) => match i.checked_neg() {
                        Some(n) => Ok(Value::Int(n)),
                        None => runtime("R001", "integer overflow in negation", span),
                    },
                    (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    (UnaryOp::Neg, other) => runtime(
                        "R003",
                        format!("`-` expects int, found {}", other.type_name()),
                        span,
                    ),
                    (UnaryOp::Not, other) => runtime(
                        "R003",
                        format!("`!` expects bool, found {}", other.type_name()),
                        span,
                    ),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, span),
            ExprKind::If {
                cond,
                then_expr,
                else_expr,
            } => {
                if self.condition(cond, "`if`")? {
                    self.expr(then_expr)
                } else {
                    self.expr(else_expr)
                }
            }
            ExprKind::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.expr(a)?);
                }
                match self.functions.get(callee.name.as_str()).copied() {
                    Some(def) => self.call_user(def, values, span),
                    None => self.call_builtin(&callee.name, values, span),
                }
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, lhs: &'a Expr, rhs: &'a Expr, span: Span) -> Exec<Value> {
        if matches!(op, BinaryOp::And | BinaryOp::Or) {
            let left = match self.expr(lhs)? {
                Value::Bool(b) => b,
                other => {
                    return runtime(
                        "R003",
                        format!(
                            "`{}` expects bool operands, found {}",
                            op.symbol(),
                            other.type_name()
                        ),
                        lhs.span,
                    )
                }
            };
            if (op == BinaryOp::And && !left) || (op == BinaryOp::Or && left) {
                return Ok(Value::Bool(left));
            }
            return match self.expr(rhs)? {
                Value::Bool(b) => Ok(Value::Bool(b)),
                other => runtime(
                    "R003",
                    format!(
                        "`{}` expects bool operands, found {}",
                        op.symbol(),
                        other.type_name()
                    ),
                    rhs.span,
                ),
            };
        }
        let l = self.expr(lhs)?;
        let r = self.expr(rhs)?;
        let overflow = || {
            runtime(
                "R001",
                format!("integer overflow in `{}`", op.symbol()),
                span,
            )
        };
        match (op, &l, &r) {
            (BinaryOp::Add, Value::Int(a), Value::Int(b)) => {
                a.checked_add(*b).map(Value::Int).map_or_else(overflow, Ok)
            }
            (BinaryOp::Add, Value::Str(a), Value::Str(b)) => {
                self.check_string(a.len() + b.len(), span)?;
                let mut s = String::with_capacity(a.len() + b.len());
                s.push_str(a);
                s.push_str(b);
                Ok(Value::Str(s))
            }
            (BinaryOp::Sub, Value::Int(a), Value::Int(b)) => {
                a.checked_sub(*b).map(Value::Int).map_or_else(overflow, Ok)
            }
            (BinaryOp::Mul, Value::Int(a), Value::Int(b)) => {
                a.checked_mul(*b).map(Value::Int).map_or_else(overflow, Ok)
            }
            (BinaryOp::Div | BinaryOp::Rem, Value::Int(_), Value::Int(0)) => {
                runtime("R002", "division by zero", span)
            }
            (BinaryOp::Div, Value::Int(a), Value::Int(b)) => {
                a.checked_div(*b).map(Value::Int).map_or_else(overflow, Ok)
            }
            (BinaryOp::Rem, Value::Int(a), Value::Int(b)) => {
                a.checked_rem(*b).map(Value::Int).map_or_else(overflow, Ok)
            }
            (BinaryOp::Eq | BinaryOp::Ne, l, r) if l.type_name() == r.type_name() => {
                Ok(Value::Bool((l == r) == (op == BinaryOp::Eq)))
            }
            (BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge, l, r) => {
                let ord = match (l, r) {
                    (Value::Int(a), Value::Int(b)) => a.cmp(b),
                    (Value::Str(a), Value::Str(b)) => a.cmp(b),
                    _ => return self.operand_mismatch(op, l, r, span),
                };
                Ok(Value::Bool(match op {
                    BinaryOp::Lt => ord.is_lt(),
                    BinaryOp::Le => ord.is_le(),
                    BinaryOp::Gt => ord.is_gt(),
                    _ => ord.is_ge(),
                }))
            }
            (op, l, r) => self.operand_mismatch(op, l, r, span),
        }
    }

    fn operand_mismatch(&self, op: BinaryOp, l: &Value, r: &Value, span: Span) -> Exec<Value> {
        runtime(
            "R003",
            format!(
                "`{}` cannot be applied to {} and {}",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ),
            span,
        )
    }

    fn call_user(&mut self, def: &'a FnDef, args: Vec<Value>, span: Span) -> Exec<Value> {
        if self.frames.len() > MAX_CALL_DEPTH {
            return fault(
                FaultKind::MemoryExceeded,
                "R111",
                format!("call depth exceeds {MAX_CALL_DEPTH}"),
                span,
            );
        }
        if args.len() != def.params.len() {
            return runtime(
                "R009",
                format!("`{}` called with wrong arity", def.name.name),
                span,
            );
        }
        self.reserve(1, span)?;
        self.cells += 1;
        self.frames.push(Frame::new());
        for (param, value) in def.params.iter().zip(args) {
            self.bind(&param.name, value, span)?;
        }
        let result = match self.block(&def.body) {
            Ok(()) => Ok(Value::Unit),
            Err(Flow::Return(v)) => Ok(v),
            Err(fault) => return Err(fault),
        };
        let frame = self.frames.pop().expect("pushed above");
        self.cells -= frame.cells() + 1;
        result
    }

    fn require(&self, cap: Capability, builtin: &str, span: Span) -> Exec<()> {
        if self.policy.profile.has(cap) {
            Ok(())
        } else {
            fault(
                FaultKind::CapabilityDenied,
                "R100",
                format!("`{builtin}` requires the `{cap}` capability"),
                span,
            )
        }
    }

    fn call_builtin(&mut self, name: &str, mut args: Vec<Value>, span: Span) -> Exec<Value> {
        let Some(builtin) = builtins::lookup(name) else {
            return runtime("R009", format!("unknown function `{name}`"), span);
        };
        if args.len() != builtin.arity {
            return runtime("R009", format!("`{name}` called with wrong arity"), span);
        }
        if let Some(cap) = builtin.capability {
            self.require(cap, name, span)?;
        }
        match name {
            "print" => {
                let text = args[0].render();
                self.emit(&text, span)?;
                Ok(Value::Unit)
            }
            "nl" => Ok(Value::Str("\n".into())),
            "str" => {
                let s = args[0].render();
                self.check_string(s.len(), span)?;
                Ok(Value::Str(s))
            }
            "concat" => {
                let b = args.pop().expect("arity");
                let a = args.pop().expect("arity");
                match (a, b) {
                    (Value::Str(mut a), Value::Str(b)) => {
                        self.check_string(a.len() + b.len(), span)?;
                        a.push_str(&b);
                        Ok(Value::Str(a))
                    }
                    (a, b) => runtime(
                        "R003",
                        format!(
                            "`concat` expects two strings, found {} and {}",
                            a.type_name(),
                            b.type_name()
                        ),
                        span,
                    ),
                }
            }
            "len" => match &args[0] {
                Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
                other => mismatch_builtin("len", "string", other, span),
            },
            "hash_sha1" | "hash_sha512" => match &args[0] {
                Value::Str(s) => {
                    let digest = if name == "hash_sha1" {
                        hex::encode_upper(Sha1::digest(s.as_bytes()))
                    } else {
                        hex::encode_upper(Sha512::digest(s.as_bytes()))
                    };
                    self.check_string(digest.len(), span)?;
                    Ok(Value::Str(digest))
                }
                other => mismatch_builtin(name, "string", other, span),
            },
            "read_file" => {
                let path = self.path_arg(name, &args[0], span)?;
                let bytes = match self.world.read(&self.policy.profile, &path) {
                    Ok(bytes) => bytes,
                    Err(access) => return denied(access, name, &path, span),
                };
                self.check_string(bytes.len(), span)?;
                match core::str::from_utf8(bytes) {
                    Ok(s) => Ok(Value::Str(s.into())),
                    Err(_) => runtime("R006", format!("`{path}` is not valid UTF-8"), span),
                }
            }
            "write_file" => {
                let path = self.path_arg(name, &args[0], span)?;
                let content = match &args[1] {
                    Value::Str(s) => s.as_bytes().to_vec(),
                    other => return mismatch_builtin(name, "string content", other, span),
                };
                match self.world.write(&self.policy.profile, &path, content) {
                    Ok(()) => Ok(Value::Unit),
                    Err(access) => denied(access, name, &path, span),
                }
            }
            _ => runtime("R009", format!("unknown function `{name}`"), span),
        }
    }

    fn path_arg(&self, builtin: &str, arg: &Value, span: Span) -> Exec<String> {
        match arg {
            Value::Str(p) => match normalize_path(p) {
                Ok(p) => Ok(p),
                Err(e) => runtime("R004", format!("{e}"), span),
            },
            other => mismatch_builtin(builtin, "string path", other, span),
        }
    }

    /// Appends to the console, truncating at the output cap.
    fn emit(&mut self, text: &str, span: Span) -> Exec<()> {
        let cap = usize::try_from(self.policy.limits.max_output_bytes).unwrap_or(usize::MAX);
        let room = cap.saturating_sub(self.console.len());
        let needed = text.len() + 1;
        if needed <= room {
            self.console.push_str(text);
            self.console.push('\n');
            return Ok(());
        }
        let mut piece = String::with_capacity(room);
        piece.push_str(text);
        piece.push('\n');
        let mut cut = room;
        while !piece.is_char_boundary(cut) {
            cut -= 1;
        }
        self.console.push_str(&piece[..cut]);
        fault(
            FaultKind::OutputLimitExceeded,
            "R112",
            format!("console output exceeds {cap} bytes"),
            span,
        )
    }
}

fn mismatch_builtin<T>(builtin: &str, expected: &str, got: &Value, span: Span) -> Exec<T> {
    runtime(
        "R003",
        format!(
            "`{builtin}` expects a {expected}, found {}",
            got.type_name()
        ),
        span,
    )
}

fn denied<T>(access: Access, builtin: &str, path: &str, span: Span) -> Exec<T> {
    let reason = match access {
        Access::Deny(reason) => reason,
        Access::Allow => unreachable!("allowed access reported as denial"),
    };
    let (kind, code, why) = match reason {
        DenyReason::CapabilityDenied => (FaultKind::CapabilityDenied, "R100", "missing capability"),
        DenyReason::AclDenied => (
            FaultKind::AclDenied,
            "R101",
            "access control list denies it",
        ),
        DenyReason::IntegrityDenied => (
            FaultKind::IntegrityDenied,
            "R102",
            "object has a higher integrity level",
        ),
        DenyReason::NotFound => (FaultKind::RuntimeError, "R005", "no such file"),
    };
    fault(
        kind,
        code,
        format!("`{builtin}` on `{path}` denied: {why}"),
        span,
    )
}
