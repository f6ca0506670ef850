use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

const MAX_DEPTH: usize = 200;

/// Parse one MiniProc source file.
pub fn parse(source: &str, file: &str) -> Result<Ast, SyntaxError> {
    let tokens = tokenize(source, file)?;
    let mut p = Parser { tokens, at: 0, file, depth: 0 };
    let mut functions = Vec::new();
    while p.peek() != &Tok::Eof {
        functions.push(p.function()?);
    }
    Ok(Ast { functions })
}

struct Parser<'a> {
    tokens: Vec<Token>,
    at: usize,
    file: &'a str,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn prev_line(&self) -> u32 {
        self.tokens[self.at.saturating_sub(1)].pos.line
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            file: self.file.to_string(),
            pos: self.pos(),
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> SyntaxError {
        let found = self.peek().describe();
        let msg = if expected.len() == 1 {
            format!("expected {}, found {found}", expected[0])
        } else {
            format!("expected one of {}, found {found}", expected.join(", "))
        };
        self.error(msg, expected)
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, SyntaxError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            let want = format!("`{}`", tok.text());
            Err(self.unexpected(&[want.as_str()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.pos();
                self.bump();
                Ok((name, pos))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn enter(&mut self) -> Result<(), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("nesting too deep", &[]));
        }
        Ok(())
    }

    fn function(&mut self) -> Result<FunctionDecl, SyntaxError> {
        let pos = self.expect(Tok::Func)?.pos;
        let (name, _) = self.ident()?;
        let mut instances = Vec::new();
        if *self.peek() == Tok::LBracket {
            self.bump();
            loop {
                instances.push(self.ident()?.0);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RBracket => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected(&["`,`", "`]`"])),
                }
            }
        }
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?.0);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => break,
                    _ => return Err(self.unexpected(&["`,`", "`)`"])),
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(FunctionDecl { name, instances, params, body, file: self.file.to_string(), pos })
    }

    fn block(&mut self) -> Result<Block, SyntaxError> {
        self.enter()?;
        let open = self.expect(Tok::LBrace)?.pos;
        let mut stmts = Vec::new();
        loop {
            while *self.peek() == Tok::Semi {
                self.bump();
            }
            if *self.peek() == Tok::RBrace {
                break;
            }
            stmts.push(self.stmt()?);
        }
        let close = self.expect(Tok::RBrace)?.pos;
        self.depth -= 1;
        Ok(Block { stmts, open, close })
    }

    fn stmt(&mut self) -> Result<Stmt, SyntaxError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::If => {
                self.bump();
                let cond = self.expr()?;
                let then_block = self.block()?;
                let else_block = if *self.peek() == Tok::Else {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                let end_line = then_block.open.line;
                return Ok(Stmt { kind: StmtKind::If { cond, then_block, else_block }, pos, end_line });
            }
            Tok::While => {
                self.bump();
                let cond = self.expr()?;
                let body = self.block()?;
                let end_line = body.open.line;
                return Ok(Stmt { kind: StmtKind::While { cond, body }, pos, end_line });
            }
            Tok::Return => {
                self.bump();
                let same_line = self.pos().line == pos.line;
                let value = match self.peek() {
                    Tok::RBrace | Tok::Semi | Tok::Eof => None,
                    _ if same_line => Some(self.expr()?),
                    _ => None,
                };
                StmtKind::Return(value)
            }
            Tok::Break => {
                self.bump();
                StmtKind::Break
            }
            Tok::Continue => {
                self.bump();
                StmtKind::Continue
            }
            Tok::Ident(name) => match self.peek_at(1) {
                Tok::Assign => {
                    self.bump();
                    self.bump();
                    let value = self.expr()?;
                    StmtKind::Assign { target: name, value }
                }
                Tok::LParen | Tok::LBracket => self.call_stmt(name)?,
                _ => {
                    self.bump();
                    return Err(self.unexpected(&["`=`", "`(`"]));
                }
            },
            _ => {
                return Err(self.unexpected(&["statement"]));
            }
        };
        Ok(Stmt { kind, pos, end_line: self.prev_line() })
    }

    fn call_stmt(&mut self, name: String) -> Result<StmtKind, SyntaxError> {
        match name.as_str() {
            "panic" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let msg = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    _ => return Err(self.unexpected(&["string literal"])),
                };
                self.expect(Tok::RParen)?;
                Ok(StmtKind::Panic(msg))
            }
            "print" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let arg = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        PrintArg::Str(s)
                    }
                    _ => PrintArg::Expr(self.expr()?),
                };
                self.expect(Tok::RParen)?;
                Ok(StmtKind::Print(arg))
            }
            "SancovGuard" | "InstrumentETS" => {
                let kind = if name == "SancovGuard" { ProbeKind::Guard } else { ProbeKind::Ets };
                self.bump();
                self.expect(Tok::LParen)?;
                let mut ids = Vec::new();
                loop {
                    match self.peek().clone() {
                        Tok::Int(v) if (0..=u32::MAX as i64).contains(&v) => {
                            self.bump();
                            ids.push(v as u32);
                        }
                        _ => return Err(self.unexpected(&["probe id"])),
                    }
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RParen => break,
                        _ => return Err(self.unexpected(&["`,`", "`)`"])),
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(StmtKind::Probe { kind, ids })
            }
            _ => {
                let (name, _) = self.ident()?;
                Ok(StmtKind::Call(self.call_rest(name)?))
            }
        }
    }

    /// After the callee name: optional `[instance]` then the argument list.
    fn call_rest(&mut self, name: String) -> Result<Call, SyntaxError> {
        let instance = if *self.peek() == Tok::LBracket {
            self.bump();
            let inst = self.ident()?.0;
            self.expect(Tok::RBracket)?;
            Some(inst)
        } else {
            None
        };
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => break,
                    _ => return Err(self.unexpected(&["`,`", "`)`"])),
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(Call { name, instance, args })
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.enter()?;
        let e = self.binary(1)?;
        self.depth -= 1;
        Ok(e)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let pos = self.pos();
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.primary(),
        };
        self.bump();
        self.enter()?;
        let inner = self.unary()?;
        self.depth -= 1;
        Ok(Expr { kind: ExprKind::Unary(op, Box::new(inner)), pos })
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            Tok::Ident(name) => {
                self.bump();
                match (name.as_str(), self.peek()) {
                    ("input", Tok::LParen) => {
                        self.bump();
                        let idx = self.expr()?;
                        self.expect(Tok::RParen)?;
                        ExprKind::Input(Box::new(idx))
                    }
                    ("input_len", Tok::LParen) => {
                        self.bump();
                        self.expect(Tok::RParen)?;
                        ExprKind::InputLen
                    }
                    (_, Tok::LParen) | (_, Tok::LBracket) => ExprKind::Call(self.call_rest(name)?),
                    _ => ExprKind::Var(name),
                }
            }
            _ => return Err(self.unexpected(&["expression"])),
        };
        Ok(Expr { kind, pos })
    }
}
