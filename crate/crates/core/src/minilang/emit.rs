//! Canonical pretty printer.

use super::ast::*;

/// Emit every function of `ast` as one source text.
pub fn emit(ast: &Ast) -> String {
    emit_functions(ast.functions.iter()).0
}

/// Emit the functions that belong to `file`, plus the line map: entry `k`
/// holds the source line recorded on the node printed at output line `k + 1`.
pub fn emit_file(ast: &Ast, file: &str) -> (String, Vec<u32>) {
    emit_functions(ast.functions.iter().filter(|f| f.file == file))
}

fn emit_functions<'a>(funcs: impl Iterator<Item = &'a FunctionDecl>) -> (String, Vec<u32>) {
    let mut w = Writer::default();
    for (i, f) in funcs.enumerate() {
        if i > 0 {
            w.line(0, String::new(), 0);
        }
        let mut head = format!("func {}", f.name);
        if f.is_generic() {
            head.push('[');
            head.push_str(&f.instances.join(", "));
            head.push(']');
        }
        head.push('(');
        head.push_str(&f.params.join(", "));
        head.push_str(") {");
        w.line(0, head, f.pos.line);
        w.block_body(&f.body, 1);
        w.line(0, "}".into(), f.body.close.line);
    }
    (w.out, w.map)
}

#[derive(Default)]
struct Writer {
    out: String,
    map: Vec<u32>,
}

impl Writer {
    fn line(&mut self, indent: usize, text: String, src_line: u32) {
        for _ in 0..indent {
            self.out.push_str("    ");
        }
        self.out.push_str(&text);
        self.out.push('\n');
        self.map.push(src_line);
    }

    fn block_body(&mut self, b: &Block, indent: usize) {
        for s in &b.stmts {
            self.stmt(s, indent);
        }
    }

    fn stmt(&mut self, s: &Stmt, indent: usize) {
        let line = s.pos.line;
        match &s.kind {
            StmtKind::Assign { target, value } => self.line(indent, format!("{target} = {}", expr(value)), line),
            StmtKind::Call(c) => self.line(indent, call(c), line),
            StmtKind::If { cond, then_block, else_block } => {
                self.line(indent, format!("if {} {{", expr(cond)), line);
                self.block_body(then_block, indent + 1);
                match else_block {
                    Some(e) => {
                        self.line(indent, "} else {".into(), then_block.close.line);
                        self.block_body(e, indent + 1);
                        self.line(indent, "}".into(), e.close.line);
                    }
                    None => self.line(indent, "}".into(), then_block.close.line),
                }
            }
            StmtKind::While { cond, body } => {
                self.line(indent, format!("while {} {{", expr(cond)), line);
                self.block_body(body, indent + 1);
                self.line(indent, "}".into(), body.close.line);
            }
            StmtKind::Return(None) => self.line(indent, "return".into(), line),
            StmtKind::Return(Some(e)) => self.line(indent, format!("return {}", expr(e)), line),
            StmtKind::Panic(msg) => self.line(indent, format!("panic({})", string_lit(msg)), line),
            StmtKind::Print(PrintArg::Str(s)) => self.line(indent, format!("print({})", string_lit(s)), line),
            StmtKind::Print(PrintArg::Expr(e)) => self.line(indent, format!("print({})", expr(e)), line),
            StmtKind::Break => self.line(indent, "break".into(), line),
            StmtKind::Continue => self.line(indent, "continue".into(), line),
            StmtKind::Probe { kind, ids } => {
                let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                self.line(indent, format!("{}({})", kind.builtin_name(), ids.join(", ")), line)
            }
        }
    }
}

fn string_lit(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn call(c: &Call) -> String {
    let args: Vec<String> = c.args.iter().map(expr).collect();
    format!("{}({})", c.symbol(), args.join(", "))
}

/// Render an expression with the minimal parentheses that parse back to the
/// same tree (binary operators are left-associative).
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            match inner.kind {
                ExprKind::Binary(..) => format!("{sym}({})", expr(inner)),
                _ => format!("{sym}{}", expr(inner)),
            }
        }
        ExprKind::Binary(op, lhs, rhs) => {
            let prec = op.precedence();
            let l = match &lhs.kind {
                ExprKind::Binary(lop, ..) if lop.precedence() < prec => format!("({})", expr(lhs)),
                _ => expr(lhs),
            };
            let r = match &rhs.kind {
                ExprKind::Binary(rop, ..) if rop.precedence() <= prec => format!("({})", expr(rhs)),
                _ => expr(rhs),
            };
            format!("{l} {} {r}", op.symbol())
        }
        ExprKind::Call(c) => call(c),
        ExprKind::Input(idx) => format!("input({})", expr(idx)),
        ExprKind::InputLen => "input_len()".into(),
    }
}
