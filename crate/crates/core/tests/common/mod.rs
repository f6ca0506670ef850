#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use difuzz_core::graph::{GraphEdge, GraphKind, GraphNode, GraphSet, ProgramGraph};
use difuzz_core::preprocess::{BlockRef, TargetPoint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

pub const INDIRECT_CG: &str = include_str!("../fixtures/indirect_cg.dot");
pub const MANGLED_CFG: &str = include_str!("../fixtures/mangled_cfg.dot");
pub const WRAPPED_FILENAME: &str = include_str!("../fixtures/wrapped_filename.dot");
pub const LOOP_NEST: &str = include_str!("../fixtures/loop_nest.mp");

fn text<R: Rng>(rng: &mut R, max: usize) -> String {
    const ALPHABET: &[char] = &['a', 'Z', '0', '_', '/', '.', ' ', '"', '\\', '#', '|', '{', '}', '[', ']', ',', '=', ';', 'é'];
    let n = rng.random_range(0..=max);
    (0..n).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

/// A graph in the emitter's image: unique node ids, no line breaks in strings,
/// CFG entry on the first node. Some edges point at nodes outside the graph.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> ProgramGraph {
    let n = rng.random_range(0..=max_nodes);
    let kind = if rng.random_bool(0.5) {
        GraphKind::CallGraph
    } else {
        GraphKind::ControlFlowGraph(format!("f{}", rng.random_range(0..100)))
    };
    let mut ids: Vec<String> = Vec::new();
    while ids.len() < n {
        let id = format!("Node0x{:012x}", rng.random_range(0..1u64 << 48));
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let nodes: Vec<GraphNode> = ids
        .iter()
        .map(|id| GraphNode {
            node_id: id.clone(),
            filename: text(rng, 12),
            startline: rng.random(),
            headline: rng.random(),
            bbendline: rng.random(),
            startcolumn: rng.random_range(0..200),
            label: text(rng, 20),
        })
        .collect();
    let m = if n == 0 { 0 } else { rng.random_range(0..=2 * n) };
    let edges = (0..m)
        .map(|_| {
            let from = if rng.random_bool(0.95) {
                ids[rng.random_range(0..n)].clone()
            } else {
                format!("Node0x{:012x}", rng.random_range(0..1u64 << 48))
            };
            let to = if rng.random_bool(0.9) {
                ids[rng.random_range(0..n)].clone()
            } else {
                format!("Node0x{:012x}", rng.random_range(0..1u64 << 48))
            };
            GraphEdge { from, to, indirect: rng.random_bool(0.3) }
        })
        .collect();
    let entry = match kind {
        GraphKind::CallGraph => None,
        GraphKind::ControlFlowGraph(_) => nodes.first().map(|n| n.node_id.clone()),
    };
    ProgramGraph { kind, nodes, edges, entry }
}

/// Brute-force block distances: Floyd-Warshall hop counts on the call graph
/// and exhaustive simple-path enumeration inside every CFG.
pub fn oracle_distances(graphs: &GraphSet, targets: &[TargetPoint]) -> BTreeMap<BlockRef, BigRational> {
    let cg = &graphs.callgraph;
    let n = cg.nodes.len();
    const INF: u64 = u64::MAX / 4;
    let mut hop = vec![vec![INF; n]; n];
    for (i, row) in hop.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in &cg.edges {
        let a = cg.nodes.iter().position(|x| x.node_id == e.from);
        let b = cg.nodes.iter().position(|x| x.node_id == e.to);
        if let (Some(a), Some(b)) = (a, b) {
            if a != b {
                hop[a][b] = hop[a][b].min(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if hop[i][k] + hop[k][j] < hop[i][j] {
                    hop[i][j] = hop[i][k] + hop[k][j];
                }
            }
        }
    }

    let mut best: BTreeMap<BlockRef, BigRational> = BTreeMap::new();
    for t in targets {
        let mut hosts: BTreeSet<(String, usize, usize)> = BTreeSet::new();
        let mut target_symbols: BTreeSet<String> = BTreeSet::new();
        for ((f, occ), g) in &graphs.cfgs {
            for (k, node) in g.nodes.iter().enumerate() {
                if node.filename == t.file && node.startline <= t.line && t.line <= node.bbendline {
                    hosts.insert((f.clone(), *occ, k));
                    target_symbols.insert(node.label.split('#').next().unwrap().to_string());
                }
            }
        }
        let tf: Vec<usize> = (0..n).filter(|&i| target_symbols.contains(&cg.nodes[i].label)).collect();
        let fd = |label: &str| -> Option<BigRational> {
            let f = cg.nodes.iter().position(|x| x.label == label)?;
            if tf.contains(&f) {
                return Some(BigRational::zero());
            }
            let reach: Vec<u64> = tf.iter().map(|&t| hop[f][t]).filter(|&h| h < INF).collect();
            if reach.is_empty() {
                return None;
            }
            let sum: BigRational = reach.iter().map(|&h| BigRational::new(1.into(), (h as i64).into())).sum();
            Some(BigRational::from_integer((reach.len() as i64).into()) / sum)
        };
        for ((f, occ), g) in &graphs.cfgs {
            let base: Vec<Option<BigRational>> = g
                .nodes
                .iter()
                .enumerate()
                .map(|(k, node)| {
                    if hosts.contains(&(f.clone(), *occ, k)) {
                        return Some(BigRational::zero());
                    }
                    node.label
                        .split('|')
                        .skip(1)
                        .filter_map(|callee| fd(callee))
                        .min()
                        .map(|d| BigRational::from_integer(10.into()) * (BigRational::one() + d))
                })
                .collect();
            let succ: Vec<Vec<usize>> = g
                .nodes
                .iter()
                .map(|node| {
                    g.edges
                        .iter()
                        .filter(|e| e.from == node.node_id)
                        .filter_map(|e| g.nodes.iter().position(|x| x.node_id == e.to))
                        .collect()
                })
                .collect();
            for start in 0..g.nodes.len() {
                let mut found: Option<BigRational> = None;
                let mut on_path = vec![false; g.nodes.len()];
                simple_paths(start, 0, &succ, &base, &mut on_path, &mut found);
                if let Some(d) = found {
                    let key = BlockRef { function: f.clone(), occurrence: *occ, cfg_block: start };
                    match best.get(&key) {
                        Some(cur) if *cur <= d => {}
                        _ => {
                            best.insert(key, d);
                        }
                    }
                }
            }
        }
    }
    best
}

fn simple_paths(
    node: usize,
    depth: u64,
    succ: &[Vec<usize>],
    base: &[Option<BigRational>],
    on_path: &mut [bool],
    found: &mut Option<BigRational>,
) {
    on_path[node] = true;
    if let Some(b) = &base[node] {
        let cand = BigRational::from_integer((depth as i64).into()) + b;
        if found.as_ref().is_none_or(|f| cand < *f) {
            *found = Some(cand);
        }
    }
    for &m in &succ[node] {
        if !on_path[m] {
            simple_paths(m, depth + 1, succ, base, on_path, found);
        }
    }
    on_path[node] = false;
}

/// A random program with at most `max_blocks` CFG blocks in total, plus one
/// target point placed on a random line of a random block.
pub fn random_target_case(
    seed: u64,
    max_blocks: usize,
) -> (difuzz_core::minilang::Ast, GraphSet, Vec<TargetPoint>) {
    use difuzz_core::graph::{build_graphs, function_cfgs};
    use difuzz_core::minilang::gen::{random_program, GenConfig};
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let p = random_program(rng.random(), &GenConfig::small(), "prog.mp");
        let cfgs = function_cfgs(&p);
        let total: usize = cfgs.iter().map(|c| c.blocks.len()).sum();
        if total > max_blocks {
            continue;
        }
        let c = &cfgs[rng.random_range(0..cfgs.len())];
        let b = &c.blocks[rng.random_range(0..c.blocks.len())];
        let line = rng.random_range(b.start_line..=b.end_line);
        let target = TargetPoint { id: "t".into(), file: "prog.mp".into(), line, timeout_s: 1.0 };
        return (p.clone(), build_graphs(&p), vec![target]);
    }
}
