//! Call graphs and control-flow graphs with per-node debug information, plus
//! the record-style DOT dialect used to store them.

mod callgraph;
mod cfg;
mod dot;
mod store;

pub use callgraph::build_call_graph;
pub use cfg::{build_cfg, function_cfgs, Anchor, BasicBlock, Branch, FunctionCfg, ListPath};
pub use dot::{emit_dot, parse_dot, DotSyntaxError};
pub use store::{build_graphs, cfg_file_name, GraphSet, StoreError};

use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphNode {
    pub node_id: String,
    pub filename: String,
    pub startline: u32,
    pub headline: u32,
    pub bbendline: u32,
    pub startcolumn: u32,
    /// Record label without the surrounding braces.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphEdge {
    pub from: String,
    pub to: String,
    pub indirect: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GraphKind {
    CallGraph,
    /// CFG of the function with the given symbol.
    ControlFlowGraph(String),
}

/// A call graph or one function's CFG.
///
/// Edges form a multiset: equality ignores their order.
#[derive(Debug, Clone, Eq)]
pub struct ProgramGraph {
    pub kind: GraphKind,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// First block of a CFG; `None` for call graphs.
    pub entry: Option<String>,
}

impl PartialEq for ProgramGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.kind != other.kind || self.nodes != other.nodes || self.entry != other.entry {
            return false;
        }
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        a.sort();
        b.sort();
        a == b
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown function `{0}`")]
pub struct UnknownFunction(pub String);

impl ProgramGraph {
    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.node_id == id)
    }

    /// Successor lists by node index. Edges to unknown nodes are skipped.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let idx: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.node_id.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (idx.get(e.from.as_str()), idx.get(e.to.as_str())) {
                if !adj[a].contains(&b) {
                    adj[a].push(b);
                }
            }
        }
        adj
    }

    /// Indices of nodes reachable from the entry (all nodes for call graphs
    /// without an entry).
    pub fn reachable_from_entry(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let Some(start) = self.entry.as_deref().and_then(|e| self.index_of(e)) else {
            return vec![self.entry.is_none(); self.nodes.len()];
        };
        let adj = self.adjacency();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }
}

/// CFG node label: `symbol#bbK`, followed by `|callee` for every function the
/// block calls.
pub fn cfg_label(symbol: &str, block: usize, callees: &[String]) -> String {
    let mut s = format!("{symbol}#bb{block}");
    for c in callees {
        s.push('|');
        s.push_str(c);
    }
    s
}

/// Inverse of [`cfg_label`].
pub fn parse_cfg_label(label: &str) -> Option<(String, usize, Vec<String>)> {
    let mut parts = label.split('|');
    let head = parts.next()?;
    let (symbol, block) = head.rsplit_once("#bb")?;
    let block = block.parse().ok()?;
    Some((symbol.to_string(), block, parts.map(str::to_string).collect()))
}

pub(crate) fn node_id(base: u64, index: usize) -> String {
    format!("Node0x{:012x}", (base + index as u64 * 0x40) & 0xffff_ffff_ffff)
}

pub(crate) fn id_base(key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    0x5500_0000_0000 | ((h & 0xff_ffff) << 16)
}
