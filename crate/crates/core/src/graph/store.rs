use std::collections::BTreeMap;
use std::path::Path;

use super::cfg::function_cfgs;
use super::{build_call_graph, emit_dot, parse_dot, DotSyntaxError, GraphKind, ProgramGraph};
use crate::minilang::Ast;

/// Every graph of one program: the call graph and one CFG per function
/// occurrence, keyed by (function name, occurrence).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSet {
    pub callgraph: ProgramGraph,
    pub cfgs: BTreeMap<(String, usize), ProgramGraph>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Dot { path: String, source: DotSyntaxError },
    #[error("{path}: {message}")]
    Layout { path: String, message: String },
}

pub fn cfg_file_name(function: &str, occurrence: usize) -> String {
    format!("cfg.{function}.{occurrence}.dot")
}

pub fn build_graphs(ast: &Ast) -> GraphSet {
    let cfgs = function_cfgs(ast).into_iter().map(|c| ((c.name.clone(), c.occurrence), c.to_graph())).collect();
    GraphSet { callgraph: build_call_graph(ast), cfgs }
}

impl GraphSet {
    /// Write `callgraph.dot` and the `cfg.*.dot` files into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), StoreError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| StoreError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let cg = dir.join("callgraph.dot");
        std::fs::write(&cg, emit_dot(&self.callgraph)).map_err(io(&cg))?;
        for ((name, occ), g) in &self.cfgs {
            let path = dir.join(cfg_file_name(name, *occ));
            std::fs::write(&path, emit_dot(g)).map_err(io(&path))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<GraphSet, StoreError> {
        let read = |path: &Path| -> Result<ProgramGraph, StoreError> {
            let p = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io { path: p.clone(), source })?;
            parse_dot(&text).map_err(|source| StoreError::Dot { path: p, source })
        };
        let callgraph = read(&dir.join("callgraph.dot"))?;
        if callgraph.kind != GraphKind::CallGraph {
            return Err(StoreError::Layout {
                path: dir.join("callgraph.dot").display().to_string(),
                message: "not a call graph".into(),
            });
        }
        let mut cfgs = BTreeMap::new();
        let entries = std::fs::read_dir(dir).map_err(|source| StoreError::Io { path: dir.display().to_string(), source })?;
        for entry in entries {
            let entry = entry.map_err(|source| StoreError::Io { path: dir.display().to_string(), source })?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(stem) = name.strip_prefix("cfg.").and_then(|s| s.strip_suffix(".dot")) else {
                continue;
            };
            let bad = || StoreError::Layout { path: entry.path().display().to_string(), message: "bad CFG file name".into() };
            let (function, occ) = stem.rsplit_once('.').ok_or_else(bad)?;
            let occ: usize = occ.parse().map_err(|_| bad())?;
            let g = read(&entry.path())?;
            if !matches!(g.kind, GraphKind::ControlFlowGraph(_)) {
                return Err(StoreError::Layout {
                    path: entry.path().display().to_string(),
                    message: "not a control-flow graph".into(),
                });
            }
            cfgs.insert((function.to_string(), occ), g);
        }
        Ok(GraphSet { callgraph, cfgs })
    }
}
