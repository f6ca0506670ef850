//! Basic-block decomposition of MiniProc functions.
//!
//! Rules:
//! - straight-line statements and the condition of an `if` share a block;
//! - an `if` ends its block; the then/else bodies start new blocks and the
//!   statements after the `if` start a join block;
//! - a `while` condition gets its own header block (unless the current block
//!   is still empty), the loop body starts a block with a back edge to the
//!   header, and the statements after the loop start an exit block;
//! - `return`, `panic`, `break` and `continue` end their block;
//! - blocks unreachable from the entry are dropped.
//!
//! Probe statements never start or end a block.

use std::collections::VecDeque;

use super::{cfg_label, id_base, node_id, GraphEdge, GraphKind, GraphNode, ProgramGraph, UnknownFunction};
use crate::minilang::ast::{stmt_head_calls, Ast, Block, FunctionDecl, Pos, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Then,
    Else,
    Body,
}

/// Route from a function body to a nested statement list: each step names a
/// statement of the enclosing list and which of its child lists to enter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ListPath(pub Vec<(usize, Branch)>);

impl ListPath {
    pub fn child(&self, index: usize, branch: Branch) -> ListPath {
        let mut v = self.0.clone();
        v.push((index, branch));
        ListPath(v)
    }

    /// Resolve the path inside `body`.
    pub fn resolve<'a>(&self, body: &'a Block) -> Option<&'a Block> {
        let mut cur = body;
        for &(i, br) in &self.0 {
            cur = match (&cur.stmts.get(i)?.kind, br) {
                (StmtKind::If { then_block, .. }, Branch::Then) => then_block,
                (StmtKind::If { else_block: Some(e), .. }, Branch::Else) => e,
                (StmtKind::While { body, .. }, Branch::Body) => body,
                _ => return None,
            };
        }
        Some(cur)
    }
}

/// A statement slot: position `index` in the list at `list`. `index` may equal
/// the list length, meaning "at the end".
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Anchor {
    pub list: ListPath,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    /// Where the block begins; probes for the block go here.
    pub anchor: Anchor,
    /// Slot of the first non-probe statement, if any.
    pub first_stmt: Option<Anchor>,
    pub start_line: u32,
    pub head_line: u32,
    pub end_line: u32,
    pub start_column: u32,
    /// Called function symbols, first call first, without repeats.
    pub calls: Vec<String>,
    pub succs: Vec<usize>,
}

/// The CFG of one occurrence of a declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionCfg {
    pub name: String,
    pub occurrence: usize,
    pub symbol: String,
    pub file: String,
    pub blocks: Vec<BasicBlock>,
}

impl FunctionCfg {
    pub fn edge_count(&self) -> usize {
        self.blocks.iter().map(|b| b.succs.len()).sum()
    }

    pub fn to_graph(&self) -> ProgramGraph {
        let base = id_base(&format!("{}:{}", self.file, self.symbol));
        let nodes: Vec<GraphNode> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| GraphNode {
                node_id: node_id(base, k),
                filename: self.file.clone(),
                startline: b.start_line,
                headline: b.head_line,
                bbendline: b.end_line,
                startcolumn: b.start_column,
                label: cfg_label(&self.symbol, k, &b.calls),
            })
            .collect();
        let edges = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(k, b)| {
                let nodes = &nodes;
                b.succs.iter().map(move |&s| GraphEdge {
                    from: nodes[k].node_id.clone(),
                    to: nodes[s].node_id.clone(),
                    indirect: false,
                })
            })
            .collect();
        let entry = nodes.first().map(|n| n.node_id.clone());
        ProgramGraph { kind: GraphKind::ControlFlowGraph(self.symbol.clone()), nodes, edges, entry }
    }
}

/// CFG of `function`'s `occurrence`, as a graph.
pub fn build_cfg(ast: &Ast, function: &str, occurrence: usize) -> Result<ProgramGraph, UnknownFunction> {
    let decl = ast
        .functions
        .iter()
        .find(|f| f.name == function && occurrence < f.occurrences())
        .ok_or_else(|| UnknownFunction(format!("{function}#{occurrence}")))?;
    Ok(decompose(decl, occurrence).to_graph())
}

/// CFGs of every occurrence of every function, in declaration order.
pub fn function_cfgs(ast: &Ast) -> Vec<FunctionCfg> {
    ast.functions.iter().flat_map(|f| (0..f.occurrences()).map(move |occ| decompose(f, occ))).collect()
}

pub(crate) fn decompose(f: &FunctionDecl, occurrence: usize) -> FunctionCfg {
    let mut b = Builder { blocks: Vec::new() };
    let entry = b.new_block(Anchor::default(), f.body.close);
    b.seq(&ListPath::default(), &f.body, entry, None);

    // Keep blocks reachable from the entry, numbered in creation order.
    let mut reach = vec![false; b.blocks.len()];
    reach[entry] = true;
    let mut queue = VecDeque::from([entry]);
    while let Some(n) = queue.pop_front() {
        for &s in &b.blocks[n].succs {
            if !reach[s] {
                reach[s] = true;
                queue.push_back(s);
            }
        }
    }
    let mut remap = vec![usize::MAX; b.blocks.len()];
    let mut next = 0;
    for (i, r) in reach.iter().enumerate() {
        if *r {
            remap[i] = next;
            next += 1;
        }
    }

    let mut blocks = Vec::with_capacity(next);
    for (i, raw) in b.blocks.into_iter().enumerate() {
        if !reach[i] {
            continue;
        }
        let stmts: Vec<&(Anchor, &Stmt)> = raw.members.iter().filter(|(_, s)| !s.kind.is_probe()).collect();
        let first_stmt = stmts.first().map(|(a, _)| a.clone());
        let last = stmts.iter().map(|(_, s)| s.end_line.max(s.pos.line)).max();
        let (start_line, head_line, end_line, start_column) = if remap[i] == 0 {
            let head = f.head_line();
            (f.pos.line, head, last.unwrap_or(raw.close.line).max(head), f.pos.column)
        } else {
            match stmts.first() {
                Some((_, s)) => (s.pos.line, s.pos.line, last.unwrap_or(s.pos.line), s.pos.column),
                None => (raw.close.line, raw.close.line, raw.close.line, raw.close.column),
            }
        };
        let mut calls: Vec<String> = Vec::new();
        for (_, s) in &stmts {
            for c in stmt_head_calls(s) {
                let sym = c.symbol();
                if !calls.contains(&sym) {
                    calls.push(sym);
                }
            }
        }
        blocks.push(BasicBlock {
            anchor: raw.anchor,
            first_stmt,
            start_line,
            head_line,
            end_line,
            start_column,
            calls,
            succs: raw.succs.iter().map(|&s| remap[s]).collect(),
        });
    }
    FunctionCfg { name: f.name.clone(), occurrence, symbol: f.symbol(occurrence), file: f.file.clone(), blocks }
}

struct Raw<'a> {
    anchor: Anchor,
    /// Closing brace of the list the block lives in.
    close: Pos,
    members: Vec<(Anchor, &'a Stmt)>,
    succs: Vec<usize>,
}

struct Builder<'a> {
    blocks: Vec<Raw<'a>>,
}

impl<'a> Builder<'a> {
    fn new_block(&mut self, anchor: Anchor, close: Pos) -> usize {
        self.blocks.push(Raw { anchor, close, members: Vec::new(), succs: Vec::new() });
        self.blocks.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize) {
        if !self.blocks[from].succs.contains(&to) {
            self.blocks[from].succs.push(to);
        }
    }

    /// Lay out `list` starting in block `cur`; returns the block control falls
    /// out of, or `None` if the list always transfers control elsewhere.
    fn seq(&mut self, path: &ListPath, list: &'a Block, mut cur: usize, lp: Option<(usize, usize)>) -> Option<usize> {
        for (i, s) in list.stmts.iter().enumerate() {
            let here = Anchor { list: path.clone(), index: i };
            match &s.kind {
                StmtKind::If { then_block, else_block, .. } => {
                    self.blocks[cur].members.push((here, s));
                    let tp = path.child(i, Branch::Then);
                    let t = self.new_block(Anchor { list: tp.clone(), index: 0 }, then_block.close);
                    self.edge(cur, t);
                    let t_end = self.seq(&tp, then_block, t, lp);
                    let e_end = match else_block {
                        Some(eb) => {
                            let ep = path.child(i, Branch::Else);
                            let e = self.new_block(Anchor { list: ep.clone(), index: 0 }, eb.close);
                            self.edge(cur, e);
                            self.seq(&ep, eb, e, lp)
                        }
                        None => Some(cur),
                    };
                    let join = self.new_block(Anchor { list: path.clone(), index: i + 1 }, list.close);
                    for end in [t_end, e_end].into_iter().flatten() {
                        self.edge(end, join);
                    }
                    cur = join;
                }
                StmtKind::While { body, .. } => {
                    let header = if self.blocks[cur].members.iter().all(|(_, m)| m.kind.is_probe()) {
                        cur
                    } else {
                        let h = self.new_block(here.clone(), list.close);
                        self.edge(cur, h);
                        h
                    };
                    self.blocks[header].members.push((here, s));
                    let bp = path.child(i, Branch::Body);
                    let b = self.new_block(Anchor { list: bp.clone(), index: 0 }, body.close);
                    let exit = self.new_block(Anchor { list: path.clone(), index: i + 1 }, list.close);
                    self.edge(header, b);
                    self.edge(header, exit);
                    if let Some(end) = self.seq(&bp, body, b, Some((header, exit))) {
                        self.edge(end, header);
                    }
                    cur = exit;
                }
                StmtKind::Return(_) | StmtKind::Panic(_) => {
                    self.blocks[cur].members.push((here, s));
                    return None;
                }
                StmtKind::Break | StmtKind::Continue => {
                    self.blocks[cur].members.push((here, s));
                    if let Some((header, exit)) = lp {
                        let to = if matches!(s.kind, StmtKind::Break) { exit } else { header };
                        self.edge(cur, to);
                    }
                    return None;
                }
                _ => self.blocks[cur].members.push((here, s)),
            }
        }
        Some(cur)
    }
}
