//! Syntax tree for MiniProc programs.

use std::fmt;

/// Line/column inside one source file. Both are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub const fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

/// A position qualified by its file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct SourcePosition {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for SourcePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

/// A whole program: the functions of every source file, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ast {
    pub functions: Vec<FunctionDecl>,
}

/// One function declaration.
///
/// A declaration with a non-empty `instances` list is generic: each instance
/// is a separate function (its *occurrence* is the index into `instances`)
/// and all of them share this declaration's source span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    pub instances: Vec<String>,
    pub params: Vec<String>,
    pub body: Block,
    pub file: String,
    /// Position of the `func` keyword.
    pub pos: Pos,
}

impl FunctionDecl {
    /// Number of concrete functions this declaration stands for.
    pub fn occurrences(&self) -> usize {
        self.instances.len().max(1)
    }

    pub fn is_generic(&self) -> bool {
        !self.instances.is_empty()
    }

    /// Symbol of one occurrence: `name` or `name[inst]`.
    pub fn symbol(&self, occurrence: usize) -> String {
        match self.instances.get(occurrence) {
            Some(inst) => format!("{}[{}]", self.name, inst),
            None => self.name.clone(),
        }
    }

    /// Last line of the signature: the line holding the opening brace.
    pub fn head_line(&self) -> u32 {
        self.body.open.line
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub open: Pos,
    pub close: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
    /// Line of the statement's last token (for `if`/`while`: the opening brace).
    pub end_line: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeKind {
    /// `SancovGuard(id)`: coverage guard.
    Guard,
    /// `InstrumentETS(id)`: ETS trace probe.
    Ets,
}

impl ProbeKind {
    pub fn builtin_name(self) -> &'static str {
        match self {
            ProbeKind::Guard => "SancovGuard",
            ProbeKind::Ets => "InstrumentETS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign { target: String, value: Expr },
    Call(Call),
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    Return(Option<Expr>),
    Panic(String),
    Print(PrintArg),
    Break,
    Continue,
    /// Instrumentation call. Holds one id per occurrence of the enclosing
    /// function; `0` means "no probe for that occurrence".
    Probe { kind: ProbeKind, ids: Vec<u32> },
}

impl StmtKind {
    pub fn is_probe(&self) -> bool {
        matches!(self, StmtKind::Probe { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrintArg {
    Str(String),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub name: String,
    pub instance: Option<String>,
    pub args: Vec<Expr>,
}

impl Call {
    pub fn symbol(&self) -> String {
        match &self.instance {
            Some(inst) => format!("{}[{}]", self.name, inst),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
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

impl BinOp {
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Call),
    Input(Box<Expr>),
    InputLen,
}

impl Ast {
    /// Distinct file names in first-appearance order.
    pub fn files(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.functions {
            if !out.contains(&f.file) {
                out.push(f.file.clone());
            }
        }
        out
    }

    /// Declaration index of the function called `name`.
    pub fn find(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    /// Concatenate several per-file ASTs into one program.
    pub fn merge(parts: impl IntoIterator<Item = Ast>) -> Ast {
        Ast { functions: parts.into_iter().flat_map(|a| a.functions).collect() }
    }

    /// Copy with every position zeroed, for structural comparison.
    pub fn erase_positions(&self) -> Ast {
        let mut ast = self.clone();
        for f in &mut ast.functions {
            f.pos = Pos::default();
            erase_block(&mut f.body);
        }
        ast
    }

    /// True when the program already contains coverage guards.
    pub fn has_guards(&self) -> bool {
        fn block_has(b: &Block) -> bool {
            b.stmts.iter().any(|s| match &s.kind {
                StmtKind::Probe { kind: ProbeKind::Guard, .. } => true,
                StmtKind::If { then_block, else_block, .. } => {
                    block_has(then_block) || else_block.as_ref().is_some_and(block_has)
                }
                StmtKind::While { body, .. } => block_has(body),
                _ => false,
            })
        }
        self.functions.iter().any(|f| block_has(&f.body))
    }
}

fn erase_block(b: &mut Block) {
    b.open = Pos::default();
    b.close = Pos::default();
    for s in &mut b.stmts {
        s.pos = Pos::default();
        s.end_line = 0;
        match &mut s.kind {
            StmtKind::Assign { value, .. } => erase_expr(value),
            StmtKind::Call(c) => c.args.iter_mut().for_each(erase_expr),
            StmtKind::If { cond, then_block, else_block } => {
                erase_expr(cond);
                erase_block(then_block);
                if let Some(e) = else_block {
                    erase_block(e);
                }
            }
            StmtKind::While { cond, body } => {
                erase_expr(cond);
                erase_block(body);
            }
            StmtKind::Return(Some(e)) => erase_expr(e),
            StmtKind::Print(PrintArg::Expr(e)) => erase_expr(e),
            _ => {}
        }
    }
}

fn erase_expr(e: &mut Expr) {
    e.pos = Pos::default();
    match &mut e.kind {
        ExprKind::Unary(_, a) | ExprKind::Input(a) => erase_expr(a),
        ExprKind::Binary(_, a, b) => {
            erase_expr(a);
            erase_expr(b);
        }
        ExprKind::Call(c) => c.args.iter_mut().for_each(erase_expr),
        _ => {}
    }
}

/// Visit every call (statement or expression) inside an expression, in
/// evaluation order.
pub fn expr_calls<'a>(e: &'a Expr, out: &mut Vec<&'a Call>) {
    match &e.kind {
        ExprKind::Unary(_, a) | ExprKind::Input(a) => expr_calls(a, out),
        ExprKind::Binary(_, a, b) => {
            expr_calls(a, out);
            expr_calls(b, out);
        }
        ExprKind::Call(c) => {
            c.args.iter().for_each(|a| expr_calls(a, out));
            out.push(c);
        }
        ExprKind::Int(_) | ExprKind::Var(_) | ExprKind::InputLen => {}
    }
}

/// Calls evaluated by the statement itself (not by nested blocks).
pub fn stmt_head_calls(s: &Stmt) -> Vec<&Call> {
    let mut out = Vec::new();
    match &s.kind {
        StmtKind::Assign { value, .. } => expr_calls(value, &mut out),
        StmtKind::Call(c) => {
            c.args.iter().for_each(|a| expr_calls(a, &mut out));
            out.push(c);
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => expr_calls(cond, &mut out),
        StmtKind::Return(Some(e)) | StmtKind::Print(PrintArg::Expr(e)) => expr_calls(e, &mut out),
        _ => {}
    }
    out
}
