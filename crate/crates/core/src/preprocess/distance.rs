//! Function- and block-level distances.
//!
//! Function distance: 0 for a function hosting a target block, otherwise the
//! harmonic mean of call-graph hop counts to every reachable target function.
//!
//! Block distance: a block hosting a target has base 0; any other block that
//! calls functions at finite distance has base `CALL_COST * (1 + min d_f)`.
//! The distance of a block is the minimum, over blocks `t` reachable in its
//! CFG, of the hop count to `t` plus `base(t)`. With several targets the
//! per-target distances are combined by `min`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{PreprocessError, TargetPoint};
use crate::graph::{parse_cfg_label, GraphKind, GraphSet, ProgramGraph};

/// Weight of one call transition.
pub const CALL_COST: i64 = 10;

/// A finite distance, or `None` for "unreachable".
pub type Distance = Option<BigRational>;

/// One CFG block: (function name, occurrence, block index).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct BlockRef {
    pub function: String,
    pub occurrence: usize,
    pub cfg_block: usize,
}

#[derive(Debug, Clone)]
pub struct BlockView {
    pub start_line: u32,
    pub end_line: u32,
    pub succs: Vec<usize>,
    pub calls: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CfgView {
    pub function: String,
    pub occurrence: usize,
    pub symbol: String,
    pub file: String,
    pub blocks: Vec<BlockView>,
}

/// Call graph as symbol-indexed adjacency lists.
#[derive(Debug, Clone, Default)]
pub struct CallGraphView {
    pub symbols: Vec<String>,
    pub succs: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl CallGraphView {
    pub fn index(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    fn hops_from(&self, start: usize) -> Vec<Option<u64>> {
        let mut hops = vec![None; self.symbols.len()];
        hops[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            let h = hops[n].unwrap_or(0);
            for &m in &self.succs[n] {
                if hops[m].is_none() {
                    hops[m] = Some(h + 1);
                    queue.push_back(m);
                }
            }
        }
        hops
    }

    /// Distance of node `f` to the target function set.
    pub fn distance(&self, f: usize, targets: &BTreeSet<usize>) -> Distance {
        if targets.contains(&f) {
            return Some(BigRational::zero());
        }
        let hops = self.hops_from(f);
        let mut count = 0i64;
        let mut inv_sum = BigRational::zero();
        for &t in targets {
            if let Some(h) = hops[t] {
                count += 1;
                inv_sum += BigRational::new(1.into(), (h as i64).into());
            }
        }
        (count > 0).then(|| BigRational::from_integer(count.into()) / inv_sum)
    }
}

pub fn call_graph_view(cg: &ProgramGraph) -> CallGraphView {
    let symbols: Vec<String> = cg.nodes.iter().map(|n| n.label.clone()).collect();
    let index = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    CallGraphView { symbols, succs: cg.adjacency(), index }
}

/// Function distance of the call-graph node labelled `f` with respect to the
/// target functions (also given by label).
pub fn function_distance(cg: &ProgramGraph, f: &str, target_functions: &BTreeSet<String>) -> Distance {
    let view = call_graph_view(cg);
    let start = view.index(f)?;
    let targets = target_functions.iter().filter_map(|t| view.index(t)).collect();
    view.distance(start, &targets)
}

/// Graph set prepared for repeated distance queries.
#[derive(Debug, Clone)]
pub struct Analysis {
    cfgs: Vec<CfgView>,
    by_key: BTreeMap<(String, usize), usize>,
    cg: CallGraphView,
}

impl Analysis {
    pub fn new(graphs: &GraphSet) -> Self {
        let mut cfgs = Vec::new();
        let mut by_key = BTreeMap::new();
        for ((function, occurrence), g) in &graphs.cfgs {
            let adj = g.adjacency();
            let blocks = g
                .nodes
                .iter()
                .zip(adj)
                .map(|(n, succs)| BlockView {
                    start_line: n.startline,
                    end_line: n.bbendline,
                    succs,
                    calls: parse_cfg_label(&n.label).map(|(_, _, c)| c).unwrap_or_default(),
                })
                .collect();
            let symbol = match &g.kind {
                GraphKind::ControlFlowGraph(s) => s.clone(),
                GraphKind::CallGraph => function.clone(),
            };
            let file = g.nodes.first().map(|n| n.filename.clone()).unwrap_or_default();
            by_key.insert((function.clone(), *occurrence), cfgs.len());
            cfgs.push(CfgView { function: function.clone(), occurrence: *occurrence, symbol, file, blocks });
        }
        Analysis { cfgs, by_key, cg: call_graph_view(&graphs.callgraph) }
    }

    pub fn cfgs(&self) -> &[CfgView] {
        &self.cfgs
    }

    pub fn call_graph(&self) -> &CallGraphView {
        &self.cg
    }

    /// # Panics
    /// If `r` names a function absent from the graph set.
    pub fn cfg(&self, r: &BlockRef) -> &CfgView {
        &self.cfgs[self.by_key[&(r.function.clone(), r.occurrence)]]
    }

    /// Every block whose line range holds the target, in every occurrence.
    pub fn locate(&self, target: &TargetPoint) -> Result<Vec<BlockRef>, PreprocessError> {
        let mut out = Vec::new();
        for c in &self.cfgs {
            if c.file != target.file {
                continue;
            }
            for (k, b) in c.blocks.iter().enumerate() {
                if b.start_line <= target.line && target.line <= b.end_line {
                    out.push(BlockRef { function: c.function.clone(), occurrence: c.occurrence, cfg_block: k });
                }
            }
        }
        if out.is_empty() {
            return Err(PreprocessError::TargetNotFound {
                id: target.id.clone(),
                file: target.file.clone(),
                line: target.line,
            });
        }
        Ok(out)
    }

    /// Finite block distances with respect to one set of target blocks.
    pub fn distances_to(&self, target_blocks: &[BlockRef]) -> BTreeMap<BlockRef, BigRational> {
        let tset: BTreeSet<&BlockRef> = target_blocks.iter().collect();
        let tfuncs: BTreeSet<usize> = target_blocks
            .iter()
            .filter_map(|r| self.by_key.get(&(r.function.clone(), r.occurrence)))
            .filter_map(|&i| self.cg.index(&self.cfgs[i].symbol))
            .collect();
        let fdist: Vec<Distance> = (0..self.cg.symbols.len()).map(|f| self.cg.distance(f, &tfuncs)).collect();
        let c = BigRational::from_integer(CALL_COST.into());

        let mut out = BTreeMap::new();
        for cfg in &self.cfgs {
            let base: Vec<Distance> = cfg
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let r = BlockRef { function: cfg.function.clone(), occurrence: cfg.occurrence, cfg_block: k };
                    if tset.contains(&r) {
                        return Some(BigRational::zero());
                    }
                    b.calls
                        .iter()
                        .filter_map(|s| self.cg.index(s).and_then(|i| fdist[i].clone()))
                        .min()
                        .map(|d| &c * (BigRational::one() + d))
                })
                .collect();
            if base.iter().all(Option::is_none) {
                continue;
            }
            for k in 0..cfg.blocks.len() {
                let hops = bfs(&cfg.blocks, k);
                let best = hops
                    .iter()
                    .zip(&base)
                    .filter_map(|(h, b)| match (h, b) {
                        (Some(h), Some(b)) => Some(BigRational::from_integer((*h as i64).into()) + b),
                        _ => None,
                    })
                    .min();
                if let Some(d) = best {
                    out.insert(BlockRef { function: cfg.function.clone(), occurrence: cfg.occurrence, cfg_block: k }, d);
                }
            }
        }
        out
    }

    /// Finite block distances for several targets, combined by `min`.
    pub fn distances(&self, targets: &[TargetPoint]) -> Result<BTreeMap<BlockRef, BigRational>, PreprocessError> {
        let mut all: BTreeMap<BlockRef, BigRational> = BTreeMap::new();
        for t in targets {
            let blocks = self.locate(t)?;
            for (r, d) in self.distances_to(&blocks) {
                match all.get_mut(&r) {
                    Some(cur) if *cur <= d => {}
                    Some(cur) => *cur = d,
                    None => {
                        all.insert(r, d);
                    }
                }
            }
        }
        Ok(all)
    }
}

fn bfs(blocks: &[BlockView], start: usize) -> Vec<Option<u64>> {
    let mut hops = vec![None; blocks.len()];
    hops[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        let h = hops[n].unwrap_or(0);
        for &m in &blocks[n].succs {
            if hops[m].is_none() {
                hops[m] = Some(h + 1);
                queue.push_back(m);
            }
        }
    }
    hops
}

pub fn locate_target_blocks(graphs: &GraphSet, target: &TargetPoint) -> Result<Vec<BlockRef>, PreprocessError> {
    Analysis::new(graphs).locate(target)
}

pub fn block_distances(
    graphs: &GraphSet,
    targets: &[TargetPoint],
) -> Result<BTreeMap<BlockRef, BigRational>, PreprocessError> {
    Analysis::new(graphs).distances(targets)
}

pub fn block_distance(graphs: &GraphSet, block: &BlockRef, targets: &[TargetPoint]) -> Result<Distance, PreprocessError> {
    Ok(block_distances(graphs, targets)?.remove(block))
}
