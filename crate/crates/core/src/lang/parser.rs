//! Recursive-descent parser with statement-level error recovery.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::ast::*;
use super::diagnostic::Diagnostic;
use super::lexer::{Token, TokenKind};
use super::span::{LineIndex, Span};

/// Statements and expressions may nest at most this deep.
pub const MAX_NESTING: usize = 96;

struct Reported;

type PResult<T> = Result<T, Reported>;

pub fn parse(text: &str, tokens: &[Token]) -> (SyntaxTree, Vec<Diagnostic>) {
    let index = LineIndex::new(text);
    let eof = index.span(text.len(), text.len());
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof,
        depth: 0,
        diags: Vec::new(),
    };
    let mut program = Vec::new();
    while !parser.at_end() {
        match parser.statement(true) {
            Ok(stmt) => program.push(stmt),
            Err(Reported) => parser.synchronize(),
        }
    }
    (SyntaxTree { program }, parser.diags)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: Span,
    depth: usize,
    diags: Vec<Diagnostic>,
}

impl<'t> Parser<'t> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos + ahead).map(|t| &t.kind)
    }

    fn current_span(&self) -> Span {
        self.tokens.get(self.pos).map_or(self.eof, |t| t.span)
    }

    fn previous_span(&self) -> Span {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map_or(self.eof, |t| t.span)
    }

    fn advance(&mut self) -> Option<&'t Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn check(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let (found, span) = match self.tokens.get(self.pos) {
            Some(tok) => (tok.kind.describe(), tok.span),
            None => ("end of input".into(), self.eof),
        };
        self.diags.push(Diagnostic::error(
            "P002",
            format!("unexpected {found}; expected {expected}"),
            span,
        ));
        Err(Reported)
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> PResult<Span> {
        if self.check(kind) {
            let span = self.current_span();
            self.pos += 1;
            Ok(span)
        } else {
            self.unexpected(expected)
        }
    }

    fn ident(&mut self, expected: &str) -> PResult<Ident> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Ident(name),
                span,
            }) => {
                self.pos += 1;
                Ok(Ident {
                    name: name.clone(),
                    span: *span,
                })
            }
            _ => self.unexpected(expected),
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_NESTING {
            self.diags.push(Diagnostic::error(
                "P006",
                format!("nesting deeper than {MAX_NESTING} levels"),
                self.current_span(),
            ));
            return Err(Reported);
        }
        self.depth += 1;
        let out = f(self);
        self.depth -= 1;
        out
    }

    /// Skips to just past the next `;`, or to the next `}` or statement keyword.
    fn synchronize(&mut self) {
        while let Some(kind) = self.peek() {
            match kind {
                TokenKind::Semi => {
                    self.pos += 1;
                    return;
                }
                TokenKind::RBrace if self.depth > 0 => return,
                TokenKind::RBrace => {
                    self.pos += 1;
                    return;
                }
                TokenKind::Let
                | TokenKind::Fn
                | TokenKind::While
                | TokenKind::If
                | TokenKind::Return => return,
                _ => self.pos += 1,
            }
        }
    }

    fn statement(&mut self, top_level: bool) -> PResult<Stmt> {
        let start = self.current_span();
        let kind = match self.peek() {
            Some(TokenKind::Let) => {
                self.advance();
                let name = self.ident("a variable name")?;
                self.expect(&TokenKind::Assign, "`=`")?;
                let value = self.expr()?;
                self.expect(&TokenKind::Semi, "`;`")?;
                StmtKind::Let { name, value }
            }
            Some(TokenKind::Ident(_)) if self.peek_at(1) == Some(&TokenKind::Assign) => {
                let name = self.ident("a variable name")?;
                self.advance();
                let value = self.expr()?;
                self.expect(&TokenKind::Semi, "`;`")?;
                StmtKind::Assign { name, value }
            }
            Some(TokenKind::If) => return self.if_statement(),
            Some(TokenKind::While) => {
                self.advance();
                self.expect(&TokenKind::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Some(TokenKind::Fn) => {
                self.advance();
                let name = self.ident("a function name")?;
                self.expect(&TokenKind::LParen, "`(`")?;
                let mut params = Vec::new();
                if !self.check(&TokenKind::RParen) {
                    loop {
                        params.push(self.ident("a parameter name")?);
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&TokenKind::RParen, "`)`")?;
                let body = self.block()?;
                if !top_level {
                    self.diags.push(Diagnostic::error(
                        "P014",
                        format!("function `{}` must be declared at top level", name.name),
                        name.span,
                    ));
                }
                StmtKind::Fn(FnDef { name, params, body })
            }
            Some(TokenKind::Return) => {
                self.advance();
                let value = if self.check(&TokenKind::Semi) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(&TokenKind::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            _ => {
                let e = self.expr()?;
                self.expect(&TokenKind::Semi, "`;`")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt {
            kind,
            span: start.join(self.previous_span()),
        })
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        let start = self.current_span();
        self.advance();
        self.expect(&TokenKind::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(&TokenKind::RParen, "`)`")?;
        let then_block = self.block()?;
        let else_branch = if self.eat(&TokenKind::Else) {
            if self.check(&TokenKind::If) {
                Some(ElseBranch::If(Box::new(self.nested(|p| p.if_statement())?)))
            } else {
                Some(ElseBranch::Block(self.block()?))
            }
        } else {
            None
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_block,
                else_branch,
            },
            span: start.join(self.previous_span()),
        })
    }

    fn block(&mut self) -> PResult<Block> {
        self.nested(|p| {
            let open = p.expect(&TokenKind::LBrace, "`{`")?;
            let mut stmts = Vec::new();
            let mut failed = false;
            loop {
                match p.peek() {
                    None => return p.unexpected("`}`"),
                    Some(TokenKind::RBrace) => break,
                    Some(_) => match p.statement(false) {
                        Ok(s) => stmts.push(s),
                        Err(Reported) => {
                            failed = true;
                            p.synchronize();
                        }
                    },
                }
            }
            let close = p.expect(&TokenKind::RBrace, "`}`")?;
            if failed {
                return Err(Reported);
            }
            Ok(Block {
                stmts,
                span: open.join(close),
            })
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.nested(|p| p.or())
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Self) -> PResult<Expr>,
        op_for: fn(&TokenKind) -> Option<BinaryOp>,
    ) -> PResult<Expr> {
        let mut lhs = next(self)?;
        while let Some(op) = self.peek().and_then(op_for) {
            self.advance();
            let rhs = next(self)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        self.binary_level(Self::and, |k| {
            (*k == TokenKind::OrOr).then_some(BinaryOp::Or)
        })
    }

    fn and(&mut self) -> PResult<Expr> {
        self.binary_level(Self::equality, |k| {
            (*k == TokenKind::AndAnd).then_some(BinaryOp::And)
        })
    }

    fn equality(&mut self) -> PResult<Expr> {
        self.binary_level(Self::comparison, |k| match k {
            TokenKind::EqEq => Some(BinaryOp::Eq),
            TokenKind::NotEq => Some(BinaryOp::Ne),
            _ => None,
        })
    }

    fn comparison(&mut self) -> PResult<Expr> {
        self.binary_level(Self::additive, |k| match k {
            TokenKind::Lt => Some(BinaryOp::Lt),
            TokenKind::Le => Some(BinaryOp::Le),
            TokenKind::Gt => Some(BinaryOp::Gt),
            TokenKind::Ge => Some(BinaryOp::Ge),
            _ => None,
        })
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.binary_level(Self::multiplicative, |k| match k {
            TokenKind::Plus => Some(BinaryOp::Add),
            TokenKind::Minus => Some(BinaryOp::Sub),
            _ => None,
        })
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.binary_level(Self::unary, |k| match k {
            TokenKind::Star => Some(BinaryOp::Mul),
            TokenKind::Slash => Some(BinaryOp::Div),
            TokenKind::Percent => Some(BinaryOp::Rem),
            _ => None,
        })
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Some(TokenKind::Minus) => UnaryOp::Neg,
            Some(TokenKind::Bang) => UnaryOp::Not,
            _ => return self.primary(),
        };
        let start = self.current_span();
        self.advance();
        let operand = self.nested(|p| p.unary())?;
        let span = start.join(operand.span);
        Ok(Expr {
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        })
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.tokens.get(self.pos) else {
            return self.unexpected("an expression");
        };
        let span = tok.span;
        let kind = match &tok.kind {
            TokenKind::Int(v) => {
                self.advance();
                ExprKind::Int(*v)
            }
            TokenKind::True => {
                self.advance();
                ExprKind::Bool(true)
            }
            TokenKind::False => {
                self.advance();
                ExprKind::Bool(false)
            }
            TokenKind::Str { raw, cooked } => {
                self.advance();
                ExprKind::Str {
                    raw: raw.clone(),
                    value: cooked.clone(),
                }
            }
            TokenKind::Ident(name) => {
                self.advance();
                if self.eat(&TokenKind::LParen) {
                    let mut args = Vec::new();
                    if !self.check(&TokenKind::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&TokenKind::Comma) {
                                break;
                            }
                        }
                    }
                    let close = self.expect(&TokenKind::RParen, "`)` or `,`")?;
                    return Ok(Expr {
                        kind: ExprKind::Call {
                            callee: Ident {
                                name: name.clone(),
                                span,
                            },
                            args,
                        },
                        span: span.join(close),
                    });
                }
                ExprKind::Var(name.clone())
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                let close = self.expect(&TokenKind::RParen, "`)`")?;
                return Ok(Expr {
                    kind: inner.kind,
                    span: span.join(close),
                });
            }
            TokenKind::If => return self.if_expr(),
            _ => return self.unexpected("an expression"),
        };
        Ok(Expr { kind, span })
    }

    fn if_expr(&mut self) -> PResult<Expr> {
        let start = self.current_span();
        self.advance();
        self.expect(&TokenKind::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(&TokenKind::RParen, "`)`")?;
        let then_expr = self.braced_expr()?;
        self.expect(
            &TokenKind::Else,
            "`else` (if-expressions need both branches)",
        )?;
        let else_expr = if self.check(&TokenKind::If) {
            self.nested(|p| p.if_expr())?
        } else {
            self.braced_expr()?
        };
        let span = start.join(else_expr.span).join(self.previous_span());
        Ok(Expr {
            kind: ExprKind::If {
                cond: Box::new(cond),
                then_expr: Box::new(then_expr),
                else_expr: Box::new(else_expr),
            },
            span,
        })
    }

    fn braced_expr(&mut self) -> PResult<Expr> {
        self.expect(&TokenKind::LBrace, "`{`")?;
        let e = self.expr()?;
        self.expect(&TokenKind::RBrace, "`}`")?;
        Ok(e)
    }
}
