//! Random well-formed MiniProc programs for property testing.
//!
//! Generated programs always terminate except through the step limit: loops
//! increment their counter before anything else in the body, and functions
//! only call functions declared after them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::*;
use super::{emit, parse};

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Functions besides `main`.
    pub max_helpers: usize,
    pub max_stmts: usize,
    pub max_depth: usize,
    /// Probability that a helper is generic with 2-3 instances.
    pub generic_prob: f64,
    pub panic_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { max_helpers: 3, max_stmts: 4, max_depth: 3, generic_prob: 0.2, panic_prob: 0.08 }
    }
}

impl GenConfig {
    /// Programs small enough for exhaustive path oracles.
    pub fn small() -> Self {
        Self { max_helpers: 3, max_stmts: 3, max_depth: 2, generic_prob: 0.2, panic_prob: 0.1 }
    }
}

/// Generate a program and return its canonical source text.
pub fn random_source(seed: u64, cfg: &GenConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ast = random_ast(&mut rng, cfg);
    emit(&ast)
}

/// Generate a program and parse it back so every node has real positions.
pub fn random_program(seed: u64, cfg: &GenConfig, file: &str) -> Ast {
    parse(&random_source(seed, cfg), file).expect("generator emits valid source")
}

struct Helper {
    name: String,
    instances: Vec<String>,
    params: usize,
}

fn p(kind: StmtKind) -> Stmt {
    Stmt { kind, pos: Pos::default(), end_line: 0 }
}

fn e(kind: ExprKind) -> Expr {
    Expr { kind, pos: Pos::default() }
}

fn block(stmts: Vec<Stmt>) -> Block {
    Block { stmts, open: Pos::default(), close: Pos::default() }
}

pub fn random_ast<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Ast {
    let n = rng.random_range(0..=cfg.max_helpers);
    let helpers: Vec<Helper> = (0..n)
        .map(|i| {
            let instances = if rng.random_bool(cfg.generic_prob) {
                let k = rng.random_range(2..=3);
                ["A", "B", "C"][..k].iter().map(|s| s.to_string()).collect()
            } else {
                Vec::new()
            };
            Helper { name: format!("f{i}"), instances, params: rng.random_range(0..=2) }
        })
        .collect();

    let mut functions = Vec::new();
    let body = FnGen { rng: &mut *rng, cfg, helpers: &helpers, callable_from: 0, vars: Vec::new(), loops: 0, counter: 0 }
        .stmts(0);
    functions.push(FunctionDecl {
        name: "main".into(),
        instances: Vec::new(),
        params: Vec::new(),
        body: block(body),
        file: String::new(),
        pos: Pos::default(),
    });
    for (i, h) in helpers.iter().enumerate() {
        let params: Vec<String> = (0..h.params).map(|k| format!("p{k}")).collect();
        let mut g = FnGen {
            rng: &mut *rng,
            cfg,
            helpers: &helpers,
            callable_from: i + 1,
            vars: params.clone(),
            loops: 0,
            counter: 0,
        };
        let mut body = g.stmts(0);
        if g.rng.random_bool(0.5) {
            let v = g.expr(1);
            body.push(p(StmtKind::Return(Some(v))));
        }
        functions.push(FunctionDecl {
            name: h.name.clone(),
            instances: h.instances.clone(),
            params,
            body: block(body),
            file: String::new(),
            pos: Pos::default(),
        });
    }
    Ast { functions }
}

struct FnGen<'a, R> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    helpers: &'a [Helper],
    callable_from: usize,
    vars: Vec<String>,
    loops: usize,
    counter: usize,
}

impl<R: Rng> FnGen<'_, R> {
    fn stmts(&mut self, depth: usize) -> Vec<Stmt> {
        let n = self.rng.random_range(1..=self.cfg.max_stmts);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            self.stmt(depth, &mut out);
            let ends = matches!(
                out.last().map(|s| &s.kind),
                Some(StmtKind::Return(_) | StmtKind::Panic(_) | StmtKind::Break | StmtKind::Continue)
            );
            if ends {
                break;
            }
        }
        out
    }

    fn fresh_var(&mut self) -> String {
        if !self.vars.is_empty() && self.rng.random_bool(0.5) {
            return self.vars[self.rng.random_range(0..self.vars.len())].clone();
        }
        let name = ["a", "b", "c", "d"][self.rng.random_range(0..4)].to_string();
        if !self.vars.contains(&name) {
            self.vars.push(name.clone());
        }
        name
    }

    fn call(&mut self, depth: usize) -> Option<Call> {
        if self.callable_from >= self.helpers.len() {
            return None;
        }
        let h = &self.helpers[self.rng.random_range(self.callable_from..self.helpers.len())];
        let instance = (!h.instances.is_empty()).then(|| h.instances[self.rng.random_range(0..h.instances.len())].clone());
        let args = (0..h.params).map(|_| self.expr(depth + 1)).collect();
        Some(Call { name: h.name.clone(), instance, args })
    }

    fn stmt(&mut self, depth: usize, out: &mut Vec<Stmt>) {
        let nested = depth < self.cfg.max_depth;
        loop {
            let roll = self.rng.random_range(0..100);
            let kind = match roll {
                0..=29 => {
                    let value = self.expr(0);
                    StmtKind::Assign { target: self.fresh_var(), value }
                }
                30..=49 if nested => {
                    let cond = self.cond();
                    let then_block = block(self.stmts(depth + 1));
                    let else_block = self.rng.random_bool(0.4).then(|| block(self.stmts(depth + 1)));
                    StmtKind::If { cond, then_block, else_block }
                }
                50..=59 if nested => {
                    let counter = format!("i{}", self.counter);
                    self.counter += 1;
                    let bound = self.rng.random_range(1..=4);
                    let cond = e(ExprKind::Binary(
                        BinOp::Lt,
                        Box::new(e(ExprKind::Var(counter.clone()))),
                        Box::new(e(ExprKind::Int(bound))),
                    ));
                    let init = p(StmtKind::Assign { target: counter.clone(), value: e(ExprKind::Int(0)) });
                    let incr = p(StmtKind::Assign {
                        target: counter.clone(),
                        value: e(ExprKind::Binary(
                            BinOp::Add,
                            Box::new(e(ExprKind::Var(counter.clone()))),
                            Box::new(e(ExprKind::Int(1))),
                        )),
                    });
                    self.loops += 1;
                    let mut body = vec![incr];
                    body.extend(self.stmts(depth + 1));
                    self.loops -= 1;
                    out.push(init);
                    StmtKind::While { cond, body: block(body) }
                }
                60..=71 => match self.call(0) {
                    Some(c) => StmtKind::Call(c),
                    None => continue,
                },
                72..=83 => {
                    if self.rng.random_bool(0.3) {
                        StmtKind::Print(PrintArg::Str(["x", "label", "done"][self.rng.random_range(0..3)].into()))
                    } else {
                        StmtKind::Print(PrintArg::Expr(self.expr(0)))
                    }
                }
                84..=89 if self.rng.random_bool(self.cfg.panic_prob.clamp(0.0, 1.0)) => {
                    StmtKind::Panic(format!("p{}", self.rng.random_range(0..10)))
                }
                90..=93 if self.loops > 0 => {
                    if self.rng.random_bool(0.5) {
                        StmtKind::Break
                    } else {
                        StmtKind::Continue
                    }
                }
                94..=96 if depth > 0 => StmtKind::Return(self.rng.random_bool(0.5).then(|| self.expr(1))),
                _ => continue,
            };
            out.push(p(kind));
            return;
        }
    }

    fn cond(&mut self) -> Expr {
        let op = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Gt, BinOp::Le][self.rng.random_range(0..5)];
        let lhs = self.expr(1);
        let rhs = self.expr(1);
        let c = e(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)));
        match self.rng.random_range(0..10) {
            0 => e(ExprKind::Unary(UnOp::Not, Box::new(c))),
            1 => {
                let other = self.cond_leaf();
                e(ExprKind::Binary(BinOp::And, Box::new(c), Box::new(other)))
            }
            2 => {
                let other = self.cond_leaf();
                e(ExprKind::Binary(BinOp::Or, Box::new(c), Box::new(other)))
            }
            _ => c,
        }
    }

    fn cond_leaf(&mut self) -> Expr {
        let lhs = e(ExprKind::Input(Box::new(e(ExprKind::Int(self.rng.random_range(0..4))))));
        let rhs = e(ExprKind::Int(self.rng.random_range(0..256)));
        e(ExprKind::Binary(BinOp::Gt, Box::new(lhs), Box::new(rhs)))
    }

    fn expr(&mut self, depth: usize) -> Expr {
        let leaf = depth >= 3 || self.rng.random_bool(0.4);
        if leaf {
            return match self.rng.random_range(0..10) {
                0..=3 => e(ExprKind::Input(Box::new(e(ExprKind::Int(self.rng.random_range(0..6)))))),
                4 => e(ExprKind::InputLen),
                5..=6 if !self.vars.is_empty() => {
                    e(ExprKind::Var(self.vars[self.rng.random_range(0..self.vars.len())].clone()))
                }
                _ => e(ExprKind::Int(self.rng.random_range(0..300))),
            };
        }
        match self.rng.random_range(0..10) {
            0 => e(ExprKind::Unary(UnOp::Neg, Box::new(self.expr(depth + 1)))),
            1 if depth == 0 => match self.call(depth + 1) {
                Some(c) => e(ExprKind::Call(c)),
                None => self.expr(depth + 1),
            },
            _ => {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem, BinOp::Lt, BinOp::Eq, BinOp::And]
                    [self.rng.random_range(0..8)];
                let a = self.expr(depth + 1);
                let b = self.expr(depth + 1);
                e(ExprKind::Binary(op, Box::new(a), Box::new(b)))
            }
        }
    }
}
