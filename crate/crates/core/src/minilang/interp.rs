//! Deterministic tree-walking interpreter.
//!
//! The AST is first lowered into a slot-resolved form so that variable access
//! and call dispatch do not hash names on every step.

use std::collections::HashMap;

use super::ast::*;
use super::check::check;
use super::MalformedAst;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;
pub const MAX_CALL_DEPTH: usize = 128;
const STDOUT_CAP: usize = 1 << 20;

/// Receiver of the instrumentation builtins. `on_start` runs before `main`,
/// which is where a real target would register its shared maps.
pub trait Hooks {
    fn on_start(&mut self) {}
    fn on_guard(&mut self, id: u32);
    fn on_ets(&mut self, id: u32);
}

/// Hooks that ignore everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoHooks;

impl Hooks for NoHooks {
    fn on_guard(&mut self, _id: u32) {}
    fn on_ets(&mut self, _id: u32) {}
}

/// Records every probe in execution order.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct RecordingHooks {
    pub started: bool,
    pub guards: Vec<u32>,
    pub ets: Vec<u32>,
}

impl Hooks for RecordingHooks {
    fn on_start(&mut self) {
        self.started = true;
    }
    fn on_guard(&mut self, id: u32) {
        self.guards.push(id);
    }
    fn on_ets(&mut self, id: u32) {
        self.ets.push(id);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecStatus {
    Normal,
    Panic { message: String, position: SourcePosition },
    StepLimitExceeded,
}

impl ExecStatus {
    pub fn is_panic(&self) -> bool {
        matches!(self, ExecStatus::Panic { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOutcome {
    pub status: ExecStatus,
    pub stdout: Vec<u8>,
    pub steps: u64,
}

/// Check, lower and run `ast` on one input.
pub fn interpret<H: Hooks>(
    ast: &Ast,
    input: &[u8],
    step_limit: u64,
    hooks: &mut H,
) -> Result<ExecOutcome, MalformedAst> {
    let machine = Machine::new(ast)?;
    Ok(machine.run(input, step_limit, hooks))
}

/// A lowered program ready for repeated execution.
#[derive(Debug, Clone)]
pub struct Machine {
    funcs: Vec<LFunc>,
    main: usize,
    files: Vec<String>,
    messages: Vec<String>,
}

#[derive(Debug, Clone)]
struct LFunc {
    n_params: usize,
    n_slots: usize,
    body: Vec<LStmt>,
    file: usize,
}

#[derive(Debug, Clone)]
enum LStmt {
    Assign(usize, LExpr),
    Call(usize, Vec<LExpr>, Pos),
    If(LExpr, Vec<LStmt>, Vec<LStmt>),
    While(LExpr, Vec<LStmt>),
    Return(Option<LExpr>),
    Panic(usize, Pos),
    PrintStr(usize),
    PrintExpr(LExpr),
    Break,
    Continue,
    Guard(u32),
    Ets(u32),
}

#[derive(Debug, Clone)]
enum LExpr {
    Int(i64),
    Slot(usize),
    Neg(Box<LExpr>),
    Not(Box<LExpr>),
    Binary(BinOp, Box<LExpr>, Box<LExpr>, Pos),
    Call(usize, Vec<LExpr>, Pos),
    Input(Box<LExpr>),
    InputLen,
}

impl Machine {
    pub fn new(ast: &Ast) -> Result<Self, MalformedAst> {
        check(ast)?;
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut n = 0;
        for f in &ast.functions {
            for occ in 0..f.occurrences() {
                index.insert(f.symbol(occ), n);
                n += 1;
            }
        }
        let files = ast.files();
        let mut lower = Lower { index: &index, messages: Vec::new(), slots: HashMap::new(), occurrence: 0 };
        let mut funcs = Vec::with_capacity(n);
        for f in &ast.functions {
            for occ in 0..f.occurrences() {
                lower.slots.clear();
                lower.occurrence = occ;
                for p in &f.params {
                    lower.slot(p);
                }
                let body = lower.block(&f.body);
                funcs.push(LFunc {
                    n_params: f.params.len(),
                    n_slots: lower.slots.len(),
                    body,
                    file: files.iter().position(|x| *x == f.file).unwrap_or(0),
                });
            }
        }
        Ok(Machine { funcs, main: index["main"], files, messages: lower.messages })
    }

    pub fn run<H: Hooks>(&self, input: &[u8], step_limit: u64, hooks: &mut H) -> ExecOutcome {
        let mut vm = Vm { m: self, input, steps: 0, limit: step_limit.max(1), stdout: Vec::new(), depth: 0, hooks };
        vm.hooks.on_start();
        let main_file = self.funcs[self.main].file;
        let status = match vm.call(self.main, Vec::new(), Pos::new(1, 1), main_file) {
            Ok(_) => ExecStatus::Normal,
            Err(Stop::StepLimit) => ExecStatus::StepLimitExceeded,
            Err(Stop::Panic { message, file, pos }) => ExecStatus::Panic {
                message,
                position: SourcePosition { file: self.files[file].clone(), line: pos.line, column: pos.column },
            },
        };
        ExecOutcome { status, stdout: vm.stdout, steps: vm.steps }
    }
}

struct Lower<'a> {
    index: &'a HashMap<String, usize>,
    messages: Vec<String>,
    slots: HashMap<String, usize>,
    occurrence: usize,
}

impl Lower<'_> {
    fn slot(&mut self, name: &str) -> usize {
        let next = self.slots.len();
        *self.slots.entry(name.to_string()).or_insert(next)
    }

    fn message(&mut self, s: &str) -> usize {
        self.messages.push(s.to_string());
        self.messages.len() - 1
    }

    fn block(&mut self, b: &Block) -> Vec<LStmt> {
        b.stmts.iter().filter_map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, s: &Stmt) -> Option<LStmt> {
        Some(match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.expr(value);
                LStmt::Assign(self.slot(target), v)
            }
            StmtKind::Call(c) => LStmt::Call(self.index[&c.symbol()], c.args.iter().map(|a| self.expr(a)).collect(), s.pos),
            StmtKind::If { cond, then_block, else_block } => LStmt::If(
                self.expr(cond),
                self.block(then_block),
                else_block.as_ref().map(|e| self.block(e)).unwrap_or_default(),
            ),
            StmtKind::While { cond, body } => LStmt::While(self.expr(cond), self.block(body)),
            StmtKind::Return(v) => LStmt::Return(v.as_ref().map(|e| self.expr(e))),
            StmtKind::Panic(msg) => LStmt::Panic(self.message(msg), s.pos),
            StmtKind::Print(PrintArg::Str(text)) => LStmt::PrintStr(self.message(text)),
            StmtKind::Print(PrintArg::Expr(e)) => LStmt::PrintExpr(self.expr(e)),
            StmtKind::Break => LStmt::Break,
            StmtKind::Continue => LStmt::Continue,
            StmtKind::Probe { kind, ids } => {
                let id = ids.get(self.occurrence).copied().unwrap_or(0);
                if id == 0 {
                    return None;
                }
                match kind {
                    ProbeKind::Guard => LStmt::Guard(id),
                    ProbeKind::Ets => LStmt::Ets(id),
                }
            }
        })
    }

    fn expr(&mut self, e: &Expr) -> LExpr {
        match &e.kind {
            ExprKind::Int(v) => LExpr::Int(*v),
            ExprKind::Var(name) => LExpr::Slot(self.slot(name)),
            ExprKind::Unary(UnOp::Neg, a) => LExpr::Neg(Box::new(self.expr(a))),
            ExprKind::Unary(UnOp::Not, a) => LExpr::Not(Box::new(self.expr(a))),
            ExprKind::Binary(op, a, b) => LExpr::Binary(*op, Box::new(self.expr(a)), Box::new(self.expr(b)), e.pos),
            ExprKind::Call(c) => LExpr::Call(self.index[&c.symbol()], c.args.iter().map(|a| self.expr(a)).collect(), e.pos),
            ExprKind::Input(i) => LExpr::Input(Box::new(self.expr(i))),
            ExprKind::InputLen => LExpr::InputLen,
        }
    }
}

enum Stop {
    StepLimit,
    Panic { message: String, file: usize, pos: Pos },
}

enum Flow {
    Next,
    Break,
    Continue,
    Return(i64),
}

struct Vm<'a, H> {
    m: &'a Machine,
    input: &'a [u8],
    steps: u64,
    limit: u64,
    stdout: Vec<u8>,
    depth: usize,
    hooks: &'a mut H,
}

impl<H: Hooks> Vm<'_, H> {
    fn tick(&mut self) -> Result<(), Stop> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(Stop::StepLimit)
        } else {
            Ok(())
        }
    }

    fn write(&mut self, bytes: &[u8]) {
        let room = STDOUT_CAP.saturating_sub(self.stdout.len());
        self.stdout.extend_from_slice(&bytes[..bytes.len().min(room)]);
    }

    fn call(&mut self, func: usize, args: Vec<i64>, at: Pos, caller_file: usize) -> Result<i64, Stop> {
        let f = &self.m.funcs[func];
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Stop::Panic { message: "call depth exceeded".into(), file: caller_file, pos: at });
        }
        debug_assert_eq!(args.len(), f.n_params);
        let mut frame = args;
        frame.resize(f.n_slots, 0);
        self.depth += 1;
        let flow = self.block(&f.body, &mut frame, f.file);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => Ok(v),
            _ => Ok(0),
        }
    }

    fn block(&mut self, stmts: &[LStmt], frame: &mut [i64], file: usize) -> Result<Flow, Stop> {
        for s in stmts {
            match self.stmt(s, frame, file)? {
                Flow::Next => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&mut self, s: &LStmt, frame: &mut [i64], file: usize) -> Result<Flow, Stop> {
        match s {
            LStmt::Guard(id) => {
                self.hooks.on_guard(*id);
                return Ok(Flow::Next);
            }
            LStmt::Ets(id) => {
                self.hooks.on_ets(*id);
                return Ok(Flow::Next);
            }
            _ => {}
        }
        self.tick()?;
        match s {
            LStmt::Assign(slot, e) => {
                frame[*slot] = self.eval(e, frame, file)?;
            }
            LStmt::Call(func, args, pos) => {
                let vals = args.iter().map(|a| self.eval(a, frame, file)).collect::<Result<Vec<_>, _>>()?;
                self.call(*func, vals, *pos, file)?;
            }
            LStmt::If(cond, then_b, else_b) => {
                let flow = if self.eval(cond, frame, file)? != 0 {
                    self.block(then_b, frame, file)?
                } else {
                    self.block(else_b, frame, file)?
                };
                return Ok(flow);
            }
            LStmt::While(cond, body) => {
                while self.eval(cond, frame, file)? != 0 {
                    match self.block(body, frame, file)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Next | Flow::Continue => {}
                    }
                    self.tick()?;
                }
            }
            LStmt::Return(v) => {
                let val = match v {
                    Some(e) => self.eval(e, frame, file)?,
                    None => 0,
                };
                return Ok(Flow::Return(val));
            }
            LStmt::Panic(msg, pos) => {
                return Err(Stop::Panic { message: self.m.messages[*msg].clone(), file, pos: *pos });
            }
            LStmt::PrintStr(msg) => {
                let m = self.m;
                self.write(m.messages[*msg].as_bytes());
                self.write(b"\n");
            }
            LStmt::PrintExpr(e) => {
                let v = self.eval(e, frame, file)?;
                self.write(format!("{v}\n").as_bytes());
            }
            LStmt::Break => return Ok(Flow::Break),
            LStmt::Continue => return Ok(Flow::Continue),
            LStmt::Guard(_) | LStmt::Ets(_) => unreachable!(),
        }
        Ok(Flow::Next)
    }

    fn eval(&mut self, e: &LExpr, frame: &mut [i64], file: usize) -> Result<i64, Stop> {
        Ok(match e {
            LExpr::Int(v) => *v,
            LExpr::Slot(s) => frame[*s],
            LExpr::Neg(a) => self.eval(a, frame, file)?.wrapping_neg(),
            LExpr::Not(a) => (self.eval(a, frame, file)? == 0) as i64,
            LExpr::Binary(BinOp::And, a, b, _) => {
                (self.eval(a, frame, file)? != 0 && self.eval(b, frame, file)? != 0) as i64
            }
            LExpr::Binary(BinOp::Or, a, b, _) => {
                (self.eval(a, frame, file)? != 0 || self.eval(b, frame, file)? != 0) as i64
            }
            LExpr::Binary(op, a, b, pos) => {
                let x = self.eval(a, frame, file)?;
                let y = self.eval(b, frame, file)?;
                match op {
                    BinOp::Add => x.wrapping_add(y),
                    BinOp::Sub => x.wrapping_sub(y),
                    BinOp::Mul => x.wrapping_mul(y),
                    BinOp::Div | BinOp::Rem if y == 0 => {
                        return Err(Stop::Panic { message: "division by zero".into(), file, pos: *pos })
                    }
                    BinOp::Div => x.wrapping_div(y),
                    BinOp::Rem => x.wrapping_rem(y),
                    BinOp::Eq => (x == y) as i64,
                    BinOp::Ne => (x != y) as i64,
                    BinOp::Lt => (x < y) as i64,
                    BinOp::Le => (x <= y) as i64,
                    BinOp::Gt => (x > y) as i64,
                    BinOp::Ge => (x >= y) as i64,
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
            LExpr::Call(func, args, pos) => {
                let vals = args.iter().map(|a| self.eval(a, frame, file)).collect::<Result<Vec<_>, _>>()?;
                self.tick()?;
                self.call(*func, vals, *pos, file)?
            }
            LExpr::Input(i) => {
                let idx = self.eval(i, frame, file)?;
                usize::try_from(idx).ok().and_then(|i| self.input.get(i)).map_or(0, |b| *b as i64)
            }
            LExpr::InputLen => self.input.len() as i64,
        })
    }
}
