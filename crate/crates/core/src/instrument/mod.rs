//! Source-level instrumentation: ETS probes (`InstrumentETS`) before the first
//! statement of every ETS block and coverage guards (`SancovGuard`) at the head
//! of every basic block.

mod rewrite;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::function_cfgs;
use crate::minilang::ast::{Ast, ProbeKind, SourcePosition};
use crate::minilang::{emit_file, load_dir, ExecOutcome, ExecStatus, Hooks, LoadError, Machine, MalformedAst};
use crate::preprocess::{read_ets_toml, EnhancedTargetSequence, PreprocessError};
use rewrite::{apply, Insertion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtsInsertion {
    pub file: String,
    pub function: String,
    pub occurrence: usize,
    pub cfg_block: usize,
    pub block_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageInsertion {
    pub file: String,
    pub function: String,
    pub occurrence: usize,
    pub cfg_block: usize,
    pub guard_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InstrumentationPlan {
    pub ets_insertions: Vec<EtsInsertion>,
    pub coverage_insertions: Vec<CoverageInsertion>,
    /// ETS blocks without a statement to put the probe in front of.
    #[serde(default)]
    pub unplaceable: Vec<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum InstrumentError {
    #[error("ETS blocks match no basic block of the program: {0:?}")]
    BlockNotMatched(Vec<u32>),
    #[error("sources already contain coverage guards")]
    AlreadyInstrumented,
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Malformed(#[from] MalformedAst),
    #[error(transparent)]
    Ets(#[from] PreprocessError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> InstrumentError {
    InstrumentError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Insert `InstrumentETS(id)` before the first statement of every ETS block.
pub fn instrument_ets(ast: &Ast, ets: &EnhancedTargetSequence) -> Result<(Ast, InstrumentationPlan), InstrumentError> {
    let cfgs = function_cfgs(ast);
    let mut plan = InstrumentationPlan::default();
    let mut unmatched = Vec::new();
    let mut inserts: BTreeMap<usize, Vec<Insertion>> = BTreeMap::new();
    for b in &ets.blocks {
        let found = ast.functions.iter().enumerate().find_map(|(di, f)| {
            (f.file == b.file && f.name == b.function && b.occurrence < f.occurrences()).then_some(di)
        });
        let Some(decl) = found else {
            unmatched.push(b.block_id);
            continue;
        };
        let cfg = cfgs
            .iter()
            .find(|c| c.file == b.file && c.name == b.function && c.occurrence == b.occurrence)
            .expect("one CFG per occurrence");
        match cfg.blocks.get(b.cfg_block) {
            Some(bb) if bb.start_line == b.start_line && bb.end_line == b.end_line => match &bb.first_stmt {
                Some(at) => {
                    inserts.entry(decl).or_default().push(Insertion {
                        at: at.clone(),
                        kind: ProbeKind::Ets,
                        occurrence: b.occurrence,
                        id: b.block_id,
                    });
                    plan.ets_insertions.push(EtsInsertion {
                        file: b.file.clone(),
                        function: b.function.clone(),
                        occurrence: b.occurrence,
                        cfg_block: b.cfg_block,
                        block_id: b.block_id,
                    });
                }
                None => plan.unplaceable.push(b.block_id),
            },
            _ => unmatched.push(b.block_id),
        }
    }
    if !unmatched.is_empty() {
        return Err(InstrumentError::BlockNotMatched(unmatched));
    }
    Ok((apply(ast, &inserts), plan))
}

/// Put `SancovGuard(id)` at the head of every basic block of every function
/// occurrence. Ids run from 1 in declaration, occurrence and block order.
pub fn instrument_coverage(ast: &Ast) -> (Ast, InstrumentationPlan) {
    let mut plan = InstrumentationPlan::default();
    let mut inserts: BTreeMap<usize, Vec<Insertion>> = BTreeMap::new();
    let mut next = 1u32;
    let cfgs = function_cfgs(ast);
    let mut it = cfgs.iter();
    for (di, f) in ast.functions.iter().enumerate() {
        for _ in 0..f.occurrences() {
            let cfg = it.next().expect("one CFG per occurrence");
            for (k, bb) in cfg.blocks.iter().enumerate() {
                inserts.entry(di).or_default().push(Insertion {
                    at: bb.anchor.clone(),
                    kind: ProbeKind::Guard,
                    occurrence: cfg.occurrence,
                    id: next,
                });
                plan.coverage_insertions.push(CoverageInsertion {
                    file: cfg.file.clone(),
                    function: cfg.name.clone(),
                    occurrence: cfg.occurrence,
                    cfg_block: k,
                    guard_id: next,
                });
                next += 1;
            }
        }
    }
    (apply(ast, &inserts), plan)
}

/// ETS instrumentation followed by coverage instrumentation.
pub fn instrument(ast: &Ast, ets: &EnhancedTargetSequence) -> Result<(Ast, InstrumentationPlan), InstrumentError> {
    if ast.has_guards() {
        return Err(InstrumentError::AlreadyInstrumented);
    }
    let (with_ets, ets_plan) = instrument_ets(ast, ets)?;
    let (out, cov_plan) = instrument_coverage(&with_ets);
    Ok((
        out,
        InstrumentationPlan {
            ets_insertions: ets_plan.ets_insertions,
            coverage_insertions: cov_plan.coverage_insertions,
            unplaceable: ets_plan.unplaceable,
        },
    ))
}

/// Contents of `plan.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(flatten)]
    pub plan: InstrumentationPlan,
    /// Per instrumented file: original source line of every emitted line.
    #[serde(default)]
    pub line_maps: BTreeMap<String, Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstrumentReport {
    pub files: Vec<String>,
    pub guards: usize,
    pub ets_probes: usize,
    pub unplaceable: Vec<u32>,
}

/// `difuzz instrument`: instrument every `.mp` file of `source_dir` and write
/// the results plus `plan.json` into `out_dir`.
pub fn instrument_program(source_dir: &Path, ets_path: &Path, out_dir: &Path) -> Result<InstrumentReport, InstrumentError> {
    let ast = load_dir(source_dir)?;
    let ets = read_ets_toml(ets_path)?;
    let (out, plan) = instrument(&ast, &ets)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut line_maps = BTreeMap::new();
    let files = ast.files();
    for file in &files {
        let (text, map) = emit_file(&out, file);
        let path = out_dir.join(file);
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        line_maps.insert(file.clone(), map);
    }
    let report = InstrumentReport {
        files,
        guards: plan.coverage_insertions.len(),
        ets_probes: plan.ets_insertions.len(),
        unplaceable: plan.unplaceable.clone(),
    };
    let plan_path = out_dir.join("plan.json");
    let json = serde_json::to_string_pretty(&PlanFile { plan, line_maps }).map_err(|e| io_err(&plan_path, e))?;
    std::fs::write(&plan_path, json + "\n").map_err(|e| io_err(&plan_path, e))?;
    Ok(report)
}

/// An instrumented program ready to execute, with the mapping from its source
/// lines back to the lines of the original program.
#[derive(Debug, Clone)]
pub struct InstrumentedProgram {
    pub ast: Ast,
    machine: Machine,
    line_maps: BTreeMap<String, Vec<u32>>,
    pub guard_count: usize,
}

impl InstrumentedProgram {
    /// Wrap an in-memory AST whose positions already are original positions.
    pub fn from_ast(ast: Ast) -> Result<Self, InstrumentError> {
        Self::with_line_maps(ast, BTreeMap::new())
    }

    pub fn with_line_maps(ast: Ast, line_maps: BTreeMap<String, Vec<u32>>) -> Result<Self, InstrumentError> {
        let machine = Machine::new(&ast)?;
        let guard_count = count_guards(&ast);
        Ok(Self { ast, machine, line_maps, guard_count })
    }

    /// Instrument `ast` for `ets` in memory.
    pub fn build(ast: &Ast, ets: &EnhancedTargetSequence) -> Result<Self, InstrumentError> {
        Self::from_ast(instrument(ast, ets)?.0)
    }

    /// Load the output directory of [`instrument_program`].
    pub fn load(dir: &Path) -> Result<Self, InstrumentError> {
        let ast = load_dir(dir)?;
        let plan_path = dir.join("plan.json");
        let line_maps = if plan_path.exists() {
            let text = std::fs::read_to_string(&plan_path).map_err(|e| io_err(&plan_path, e))?;
            let plan: PlanFile = serde_json::from_str(&text).map_err(|e| io_err(&plan_path, e))?;
            plan.line_maps
        } else {
            BTreeMap::new()
        };
        Self::with_line_maps(ast, line_maps)
    }

    /// Original line of `line` in `file`.
    pub fn original_line(&self, file: &str, line: u32) -> u32 {
        match self.line_maps.get(file) {
            Some(map) => map.get((line as usize).wrapping_sub(1)).copied().filter(|l| *l > 0).unwrap_or(line),
            None => line,
        }
    }

    /// Run once; panic positions are reported in original-source lines.
    pub fn run<H: Hooks>(&self, input: &[u8], step_limit: u64, hooks: &mut H) -> ExecOutcome {
        let mut out = self.machine.run(input, step_limit, hooks);
        if let ExecStatus::Panic { position, .. } = &mut out.status {
            *position = SourcePosition {
                line: self.original_line(&position.file, position.line),
                file: std::mem::take(&mut position.file),
                column: position.column,
            };
        }
        out
    }
}

fn count_guards(ast: &Ast) -> usize {
    use crate::minilang::ast::{Block, StmtKind};
    fn block(b: &Block) -> usize {
        b.stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::Probe { kind: ProbeKind::Guard, ids } => ids.iter().filter(|i| **i != 0).count(),
                StmtKind::If { then_block, else_block, .. } => block(then_block) + else_block.as_ref().map_or(0, block),
                StmtKind::While { body, .. } => block(body),
                _ => 0,
            })
            .sum()
    }
    ast.functions.iter().map(|f| block(&f.body)).sum()
}
