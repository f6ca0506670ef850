use std::collections::BTreeMap;

use super::ast::*;
use super::MalformedAst;

pub const BUILTINS: &[&str] = &["input", "input_len", "print", "panic", "SancovGuard", "InstrumentETS"];

/// Whole-program well-formedness: one parameterless `main`, resolvable calls,
/// loop-bound `break`/`continue`, probe arity matching the instance count.
pub fn check(ast: &Ast) -> Result<(), MalformedAst> {
    let mut by_name: BTreeMap<&str, &FunctionDecl> = BTreeMap::new();
    for f in &ast.functions {
        let at = SourcePosition { file: f.file.clone(), line: f.pos.line, column: f.pos.column };
        if BUILTINS.contains(&f.name.as_str()) {
            return Err(MalformedAst::new(at, format!("`{}` is a builtin", f.name)));
        }
        if by_name.insert(&f.name, f).is_some() {
            return Err(MalformedAst::new(at, format!("function `{}` declared twice", f.name)));
        }
        let mut seen = Vec::new();
        for inst in &f.instances {
            if seen.contains(&inst) {
                return Err(MalformedAst::new(at, format!("instance `{inst}` listed twice")));
            }
            seen.push(inst);
        }
    }
    match by_name.get("main") {
        None => {
            return Err(MalformedAst::new(
                SourcePosition { file: String::new(), line: 1, column: 1 },
                "program has no `main` function",
            ))
        }
        Some(m) if !m.params.is_empty() || m.is_generic() => {
            return Err(MalformedAst::new(
                SourcePosition { file: m.file.clone(), line: m.pos.line, column: m.pos.column },
                "`main` takes no parameters and is not generic",
            ))
        }
        Some(_) => {}
    }
    for f in &ast.functions {
        let cx = Cx { funcs: &by_name, decl: f };
        cx.block(&f.body, 0)?;
    }
    Ok(())
}

struct Cx<'a> {
    funcs: &'a BTreeMap<&'a str, &'a FunctionDecl>,
    decl: &'a FunctionDecl,
}

impl Cx<'_> {
    fn at(&self, pos: Pos) -> SourcePosition {
        SourcePosition { file: self.decl.file.clone(), line: pos.line, column: pos.column }
    }

    fn block(&self, b: &Block, loops: usize) -> Result<(), MalformedAst> {
        for s in &b.stmts {
            self.stmt(s, loops)?;
        }
        Ok(())
    }

    fn stmt(&self, s: &Stmt, loops: usize) -> Result<(), MalformedAst> {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                if BUILTINS.contains(&target.as_str()) {
                    return Err(MalformedAst::new(self.at(s.pos), format!("cannot assign to `{target}`")));
                }
                self.expr(value)
            }
            StmtKind::Call(c) => self.call(c, s.pos),
            StmtKind::If { cond, then_block, else_block } => {
                self.expr(cond)?;
                self.block(then_block, loops)?;
                if let Some(e) = else_block {
                    self.block(e, loops)?;
                }
                Ok(())
            }
            StmtKind::While { cond, body } => {
                self.expr(cond)?;
                self.block(body, loops + 1)
            }
            StmtKind::Return(Some(e)) | StmtKind::Print(PrintArg::Expr(e)) => self.expr(e),
            StmtKind::Break | StmtKind::Continue if loops == 0 => {
                Err(MalformedAst::new(self.at(s.pos), "`break`/`continue` outside of a loop"))
            }
            StmtKind::Probe { ids, .. } if ids.len() != self.decl.occurrences() => Err(MalformedAst::new(
                self.at(s.pos),
                format!("probe lists {} ids but the function has {} occurrences", ids.len(), self.decl.occurrences()),
            )),
            _ => Ok(()),
        }
    }

    fn call(&self, c: &Call, pos: Pos) -> Result<(), MalformedAst> {
        let Some(callee) = self.funcs.get(c.name.as_str()) else {
            return Err(MalformedAst::new(self.at(pos), format!("call to unknown function `{}`", c.name)));
        };
        match (&c.instance, callee.is_generic()) {
            (None, false) => {}
            (Some(inst), true) if callee.instances.contains(inst) => {}
            (Some(inst), true) => {
                return Err(MalformedAst::new(self.at(pos), format!("`{}` has no instance `{inst}`", c.name)))
            }
            (None, true) => {
                return Err(MalformedAst::new(self.at(pos), format!("generic `{}` needs an instance", c.name)))
            }
            (Some(_), false) => {
                return Err(MalformedAst::new(self.at(pos), format!("`{}` is not generic", c.name)))
            }
        }
        if callee.params.len() != c.args.len() {
            return Err(MalformedAst::new(
                self.at(pos),
                format!("`{}` takes {} arguments, {} given", c.name, callee.params.len(), c.args.len()),
            ));
        }
        c.args.iter().try_for_each(|a| self.expr(a))
    }

    fn expr(&self, e: &Expr) -> Result<(), MalformedAst> {
        match &e.kind {
            ExprKind::Int(v) if *v < 0 => Err(MalformedAst::new(self.at(e.pos), "negative literal")),
            ExprKind::Unary(_, a) | ExprKind::Input(a) => self.expr(a),
            ExprKind::Binary(_, a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
            ExprKind::Call(c) => self.call(c, e.pos),
            _ => Ok(()),
        }
    }
}
