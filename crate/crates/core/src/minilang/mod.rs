//! MiniProc: the small imperative language the whole pipeline operates on.
//!
//! Programs are directories of `.mp` files. The grammar is documented in
//! `docs/minilang.md`.

pub mod ast;
mod check;
mod emit;
pub mod gen;
pub mod interp;
mod lexer;
mod parser;

use std::fmt;
use std::path::Path;

pub use ast::{Ast, Block, Call, Expr, ExprKind, FunctionDecl, Pos, ProbeKind, SourcePosition, Stmt, StmtKind};
pub use check::check;
pub use emit::{emit, emit_file, expr as emit_expr};
pub use interp::{interpret, ExecOutcome, ExecStatus, Hooks, Machine, NoHooks, RecordingHooks, DEFAULT_STEP_LIMIT};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub file: String,
    pub pos: Pos,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.pos.line, self.pos.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{at}: {message}")]
pub struct MalformedAst {
    pub at: SourcePosition,
    pub message: String,
}

impl MalformedAst {
    pub fn new(at: SourcePosition, message: impl Into<String>) -> Self {
        Self { at, message: message.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Malformed(#[from] MalformedAst),
    #[error("no .mp files in {0}")]
    Empty(String),
}

/// Sorted `.mp` file names directly inside `dir`.
pub fn source_files(dir: &Path) -> Result<Vec<String>, LoadError> {
    let io = |e| LoadError::Io { path: dir.display().to_string(), source: e };
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".mp") && entry.path().is_file() {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

/// Parse every `.mp` file of a program directory into one checked AST. File
/// names (relative to `dir`) become the positions' file component.
pub fn load_dir(dir: &Path) -> Result<Ast, LoadError> {
    let names = source_files(dir)?;
    if names.is_empty() {
        return Err(LoadError::Empty(dir.display().to_string()));
    }
    let mut parts = Vec::new();
    for name in names {
        let path = dir.join(&name);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| LoadError::Io { path: path.display().to_string(), source: e })?;
        parts.push(parse(&text, &name)?);
    }
    let ast = Ast::merge(parts);
    check(&ast)?;
    Ok(ast)
}
