use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use super::span::Span;

/// A parsed script. Every node carries the span of the source it came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SyntaxTree {
    pub program: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnDef {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElseBranch {
    Block(Block),
    If(Box<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let {
        name: Ident,
        value: Expr,
    },
    Assign {
        name: Ident,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_branch: Option<ElseBranch>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Fn(FnDef),
    Expr(Expr),
    Return(Option<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    /// `raw` is the literal body as typed; `value` has escapes resolved.
    Str {
        raw: String,
        value: String,
    },
    Var(String),
    Call {
        callee: Ident,
        args: Vec<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then_expr: Box<Expr>,
        else_expr: Box<Expr>,
    },
}

/// Node kinds analyzers can subscribe to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyntaxKind {
    LetStatement,
    AssignStatement,
    IfStatement,
    WhileStatement,
    FunctionDefinition,
    ExpressionStatement,
    ReturnStatement,
    IntLiteral,
    BoolLiteral,
    StringLiteral,
    Identifier,
    CallExpression,
    BinaryExpression,
    UnaryExpression,
    IfExpression,
}

impl Stmt {
    pub fn syntax_kind(&self) -> SyntaxKind {
        match self.kind {
            StmtKind::Let { .. } => SyntaxKind::LetStatement,
            StmtKind::Assign { .. } => SyntaxKind::AssignStatement,
            StmtKind::If { .. } => SyntaxKind::IfStatement,
            StmtKind::While { .. } => SyntaxKind::WhileStatement,
            StmtKind::Fn(_) => SyntaxKind::FunctionDefinition,
            StmtKind::Expr(_) => SyntaxKind::ExpressionStatement,
            StmtKind::Return(_) => SyntaxKind::ReturnStatement,
        }
    }
}

impl Expr {
    pub fn syntax_kind(&self) -> SyntaxKind {
        match self.kind {
            ExprKind::Int(_) => SyntaxKind::IntLiteral,
            ExprKind::Bool(_) => SyntaxKind::BoolLiteral,
            ExprKind::Str { .. } => SyntaxKind::StringLiteral,
            ExprKind::Var(_) => SyntaxKind::Identifier,
            ExprKind::Call { .. } => SyntaxKind::CallExpression,
            ExprKind::Binary { .. } => SyntaxKind::BinaryExpression,
            ExprKind::Unary { .. } => SyntaxKind::UnaryExpression,
            ExprKind::If { .. } => SyntaxKind::IfExpression,
        }
    }
}

/// Borrowed view of any node, handed to tree visitors.
#[derive(Debug, Clone, Copy)]
pub enum Node<'a> {
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

impl<'a> Node<'a> {
    pub fn kind(&self) -> SyntaxKind {
        match self {
            Node::Stmt(s) => s.syntax_kind(),
            Node::Expr(e) => e.syntax_kind(),
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Node::Stmt(s) => s.span,
            Node::Expr(e) => e.span,
        }
    }
}

impl SyntaxTree {
    /// Pre-order walk over every statement and expression.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(Node<'a>)) {
        for stmt in &self.program {
            walk_stmt(stmt, visit);
        }
    }
}

fn walk_block<'a>(block: &'a Block, visit: &mut dyn FnMut(Node<'a>)) {
    for stmt in &block.stmts {
        walk_stmt(stmt, visit);
    }
}

fn walk_stmt<'a>(stmt: &'a Stmt, visit: &mut dyn FnMut(Node<'a>)) {
    visit(Node::Stmt(stmt));
    match &stmt.kind {
        StmtKind::Let { value, .. } | StmtKind::Assign { value, .. } => walk_expr(value, visit),
        StmtKind::If {
            cond,
            then_block,
            else_branch,
        } => {
            walk_expr(cond, visit);
            walk_block(then_block, visit);
            match else_branch {
                Some(ElseBranch::Block(b)) => walk_block(b, visit),
                Some(ElseBranch::If(s)) => walk_stmt(s, visit),
                None => {}
            }
        }
        StmtKind::While { cond, body } => {
            walk_expr(cond, visit);
            walk_block(body, visit);
        }
        StmtKind::Fn(def) => walk_block(&def.body, visit),
        StmtKind::Expr(e) => walk_expr(e, visit),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(e, visit);
            }
        }
    }
}

fn walk_expr<'a>(expr: &'a Expr, visit: &mut dyn FnMut(Node<'a>)) {
    visit(Node::Expr(expr));
    match &expr.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str { .. } | ExprKind::Var(_) => {}
        ExprKind::Call { args, .. } => {
            for a in args {
                walk_expr(a, visit);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, visit);
            walk_expr(rhs, visit);
        }
        ExprKind::Unary { operand, .. } => walk_expr(operand, visit),
        ExprKind::If {
            cond,
            then_expr,
            else_expr,
        } => {
            walk_expr(cond, visit);
            walk_expr(then_expr, visit);
            walk_expr(else_expr, visit);
        }
    }
}
