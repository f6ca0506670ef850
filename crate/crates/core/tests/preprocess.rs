mod common;

use std::collections::BTreeSet;

use common::{oracle_distances, random_target_case};
use difuzz_core::graph::{build_call_graph, build_graphs, GraphEdge, GraphSet};
use difuzz_core::minilang::{load_dir, parse};
use difuzz_core::preprocess::{
    block_distance, compute_ets, format_weight, from_toml_str, function_distance, locate_target_blocks, parse_targets,
    read_ets_toml, to_toml_string, write_ets_toml, BlockRef, EnhancedTargetSequence, EtsBlock, PreprocessError,
    TargetPoint,
};
use num_rational::BigRational;
use proptest::prelude::*;

fn target(file: &str, line: u32) -> TargetPoint {
    TargetPoint { id: "t1".into(), file: file.into(), line, timeout_s: 10.0 }
}

fn graphs(src: &str) -> GraphSet {
    build_graphs(&parse(src, "p.mp").unwrap())
}

fn r(function: &str, occurrence: usize, cfg_block: usize) -> BlockRef {
    BlockRef { function: function.into(), occurrence, cfg_block }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn chain() -> GraphSet {
    build_graphs(&load_dir(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/chain"))).unwrap())
}

const IF_PANIC: &str = "func main() {\n    if input(0) == 1 {\n        panic(\"a\")\n    }\n}\n";

#[test]
fn locate_panic_line_in_then_block() {
    let g = graphs(IF_PANIC);
    let found = locate_target_blocks(&g, &target("p.mp", 3)).unwrap();
    assert_eq!(found, [r("main", 0, 1)]);
    // Brute force over every block's line range.
    let mut brute = Vec::new();
    for ((f, occ), cfg) in &g.cfgs {
        for (k, n) in cfg.nodes.iter().enumerate() {
            if n.startline <= 3 && 3 <= n.bbendline {
                brute.push(r(f, *occ, k));
            }
        }
    }
    assert_eq!(found, brute);
}

#[test]
fn locate_in_duplicate_positions() {
    let g = graphs("func h[A, B]() {\n    panic(\"x\")\n}\nfunc main() {\n    h[A]()\n    h[B]()\n}\n");
    let found = locate_target_blocks(&g, &target("p.mp", 2)).unwrap();
    assert_eq!(found, [r("h", 0, 0), r("h", 1, 0)]);
}

#[test]
fn locate_beyond_end_of_file() {
    let g = graphs(IF_PANIC);
    assert!(matches!(locate_target_blocks(&g, &target("p.mp", 99)), Err(PreprocessError::TargetNotFound { .. })));
    assert!(matches!(locate_target_blocks(&g, &target("q.mp", 3)), Err(PreprocessError::TargetNotFound { .. })));
}

#[test]
fn function_distance_examples() {
    let cg = build_call_graph(&parse("func b() {}\nfunc a() { b() }\nfunc main() { a() }", "p.mp").unwrap());
    let t: BTreeSet<String> = ["b".to_string()].into();
    assert_eq!(function_distance(&cg, "b", &t), Some(int(0)));
    assert_eq!(function_distance(&cg, "a", &t), Some(int(1)));
    assert_eq!(function_distance(&cg, "main", &t), Some(int(2)));

    // Two targets at 1 and 3 hops: harmonic mean 2 / (1 + 1/3) = 3/2.
    let src = "func t1() {}\nfunc t2() {}\nfunc x() { t2() }\nfunc y() { x() }\nfunc main() { t1() y() }";
    let cg = build_call_graph(&parse(src, "p.mp").unwrap());
    let t: BTreeSet<String> = ["t1".to_string(), "t2".to_string()].into();
    assert_eq!(function_distance(&cg, "main", &t), Some(BigRational::new(3.into(), 2.into())));
    assert_eq!(function_distance(&cg, "t1", &t), Some(int(0)));
    // t1 reaches nothing.
    let only_t2: BTreeSet<String> = ["t2".to_string()].into();
    assert_eq!(function_distance(&cg, "t1", &only_t2), None);
}

#[test]
fn block_distance_examples() {
    let g = graphs(IF_PANIC);
    let t = [target("p.mp", 3)];
    assert_eq!(block_distance(&g, &r("main", 0, 1), &t).unwrap(), Some(int(0)));
    assert_eq!(block_distance(&g, &r("main", 0, 0), &t).unwrap(), Some(int(1)));
    assert_eq!(block_distance(&g, &r("main", 0, 2), &t).unwrap(), None);

    let g = chain();
    let t = [target("main.mp", 3)];
    // b's then block calls the target's host function c (distance 0).
    assert_eq!(block_distance(&g, &r("b", 0, 1), &t).unwrap(), Some(int(10)));
    // main's then block calls b, which is one hop from c.
    assert_eq!(block_distance(&g, &r("main", 0, 1), &t).unwrap(), Some(int(20)));
    assert_eq!(block_distance(&g, &r("main", 0, 0), &t).unwrap(), Some(int(21)));
}

#[test]
fn chain_ets_matches_hand_computation() {
    let g = chain();
    let t = vec![target("main.mp", 3)];
    let ets = compute_ets(&g, &t).unwrap();
    let got: Vec<(u32, &str, usize, u32, u32, f64)> = ets
        .blocks
        .iter()
        .map(|b| (b.block_id, b.function.as_str(), b.cfg_block, b.start_line, b.end_line, b.weight))
        .collect();
    assert_eq!(
        got,
        [
            (1, "b", 0, 7, 9, 1.0 / 12.0),
            (2, "b", 1, 10, 10, 1.0 / 11.0),
            (3, "c", 0, 1, 2, 0.5),
            (4, "c", 1, 3, 3, 1.0),
            (5, "main", 0, 14, 15, 1.0 / 22.0),
            (6, "main", 1, 16, 16, 1.0 / 21.0),
        ]
    );
    assert_eq!(ets.max_block_distance, 21);
    assert_eq!(common::oracle_distances(&g, &t).len(), ets.blocks.len());
}

#[test]
fn single_block_program() {
    let g = graphs("func main() {\n    panic(\"x\")\n}\n");
    let ets = compute_ets(&g, &[target("p.mp", 2)]).unwrap();
    assert_eq!(ets.blocks.len(), 1);
    assert_eq!(ets.blocks[0].weight, 1.0);
    assert_eq!(ets.max_block_distance, 0);
}

#[test]
fn uncalled_target_function_stays_local() {
    let g = graphs("func dead() {\n    x = 1\n    panic(\"never\")\n}\nfunc main() {\n    y = 2\n}\n");
    let ets = compute_ets(&g, &[target("p.mp", 3)]).unwrap();
    assert!(ets.blocks.iter().all(|b| b.function == "dead"));
    assert_eq!(ets.blocks.len(), 1);
}

#[test]
fn multiple_targets_take_the_minimum() {
    let src = "func main() {\n    if input(0) == 1 {\n        panic(\"a\")\n    }\n    if input(1) == 2 {\n        panic(\"b\")\n    }\n}\n";
    let g = graphs(src);
    let both = compute_ets(&g, &[target("p.mp", 3), target("p.mp", 6)]).unwrap();
    let weight_one: Vec<u32> = both.blocks.iter().filter(|b| b.weight == 1.0).map(|b| b.start_line).collect();
    assert_eq!(weight_one, [3, 6]);
    let oracle = oracle_distances(&g, &both.targets);
    assert_eq!(oracle.len(), both.blocks.len());
}

#[test]
fn target_file_format() {
    let text = "# id\tlocation\ttimeout\ngoblin_1\tsrc/mach/mod.rs:187\t300\n\nx\tmain.mp:3\t2.5\n";
    let t = parse_targets(text, "targets.tsv").unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!((t[0].id.as_str(), t[0].file.as_str(), t[0].line, t[0].timeout_s), ("goblin_1", "src/mach/mod.rs", 187, 300.0));
    assert_eq!(t[1].timeout_s, 2.5);
    for bad in ["a\tb\t1", "a\tb:0\t1", "a\tb:1\t0", "a\tb:1", "a\tb:x\t1"] {
        assert!(parse_targets(bad, "t").is_err(), "{bad}");
    }
}

fn sample_ets(n: u32) -> EnhancedTargetSequence {
    EnhancedTargetSequence {
        targets: vec![TargetPoint { id: "q\"1".into(), file: "dir/a.mp".into(), line: 4, timeout_s: 300.0 }],
        blocks: (1..=n)
            .map(|i| EtsBlock {
                block_id: i,
                file: "dir/a.mp".into(),
                function: "f".into(),
                occurrence: (i % 2) as usize,
                cfg_block: i as usize,
                start_line: i,
                end_line: i + 1,
                weight: 1.0 / (1.0 + (i as f64 - 1.0) / 3.0),
            })
            .collect(),
        max_block_distance: 3,
    }
}

#[test]
fn ets_toml_round_trip() {
    let ets = sample_ets(10);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ets.toml");
    write_ets_toml(&ets, &path).unwrap();
    assert_eq!(read_ets_toml(&path).unwrap(), ets);
    assert_eq!(to_toml_string(&from_toml_str(&to_toml_string(&ets)).unwrap()), to_toml_string(&ets));
}

#[test]
fn ets_toml_duplicate_block_id() {
    let mut ets = sample_ets(3);
    ets.blocks[2].block_id = 2;
    let text = to_toml_string(&ets);
    let err = from_toml_str(&text).unwrap_err();
    let expected_line = text.lines().enumerate().filter(|(_, l)| *l == "block_id = 2").nth(1).unwrap().0 + 1;
    assert_eq!(err.line, expected_line);
    assert!(err.message.contains("duplicate"));
}

#[test]
fn ets_toml_rejects_unknown_keys() {
    let text = "max_block_distance = 0\ncolor = 1\n";
    assert!(from_toml_str(text).is_err());
    let text = "max_block_distance = 0\n[[block]]\nblock_id = 1\nfile = \"a\"\nfunction = \"f\"\noccurrence = 0\ncfg_block = 0\nstart_line = 1\nend_line = 1\nweight = 1.0\nextra = true\n";
    assert!(from_toml_str(text).is_err());
}

#[test]
fn ets_toml_hand_written() {
    let text = r#"max_block_distance = 0

[[target]]
id = "a_1"
file = "main.mp"
line = 2
timeout_s = 5

[[block]]
block_id = 1
file = "main.mp"
function = "main"
occurrence = 0
cfg_block = 0
start_line = 1
end_line = 3
weight = 1.0
"#;
    let ets = from_toml_str(text).unwrap();
    assert_eq!(
        ets,
        EnhancedTargetSequence {
            targets: vec![TargetPoint { id: "a_1".into(), file: "main.mp".into(), line: 2, timeout_s: 5.0 }],
            blocks: vec![EtsBlock {
                block_id: 1,
                file: "main.mp".into(),
                function: "main".into(),
                occurrence: 0,
                cfg_block: 0,
                start_line: 1,
                end_line: 3,
                weight: 1.0,
            }],
            max_block_distance: 0,
        }
    );
}

#[test]
fn weight_formatting() {
    assert_eq!(format_weight(1.0), "1.00000");
    assert_eq!(format_weight(0.5), "0.500000");
    assert_eq!(format_weight(1.0 / 3.0), "0.3333333333333333");
    assert_eq!(format_weight(0.0625), "0.0625000");
    assert_eq!(format_weight(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn distances_match_oracle(seed in any::<u64>()) {
        let (_, g, t) = random_target_case(seed, 20);
        let got = difuzz_core::preprocess::block_distances(&g, &t).unwrap();
        prop_assert_eq!(got, oracle_distances(&g, &t));
    }

    #[test]
    fn ets_invariants(seed in any::<u64>()) {
        let (_, g, t) = random_target_case(seed, 40);
        let ets = compute_ets(&g, &t).unwrap();
        let target_blocks = locate_target_blocks(&g, &t[0]).unwrap();
        let ids: BTreeSet<u32> = ets.blocks.iter().map(|b| b.block_id).collect();
        prop_assert_eq!(ids.len(), ets.blocks.len());
        prop_assert_eq!(ids.iter().copied().collect::<Vec<_>>(), (1..=ets.blocks.len() as u32).collect::<Vec<_>>());
        for b in &ets.blocks {
            let is_target = target_blocks.contains(&r(&b.function, b.occurrence, b.cfg_block));
            prop_assert_eq!(b.weight == 1.0, is_target);
            prop_assert!(b.weight > 0.0 && b.weight <= 1.0);
            prop_assert!(b.distance() <= ets.max_block_distance as f64 + 1e-9);
        }
        let dist = difuzz_core::preprocess::block_distances(&g, &t).unwrap();
        for a in &ets.blocks {
            for b in &ets.blocks {
                let da = &dist[&r(&a.function, a.occurrence, a.cfg_block)];
                let db = &dist[&r(&b.function, b.occurrence, b.cfg_block)];
                if da < db {
                    prop_assert!(a.weight > b.weight);
                }
            }
        }
        prop_assert_eq!(to_toml_string(&ets), to_toml_string(&compute_ets(&g, &t).unwrap()));
        prop_assert_eq!(from_toml_str(&to_toml_string(&ets)).unwrap(), ets);
    }

    #[test]
    fn extra_call_edges_never_increase_function_distance(seed in any::<u64>(), a in 0usize..8, b in 0usize..8) {
        let (_, g, t) = random_target_case(seed, 40);
        let targets: BTreeSet<String> = locate_target_blocks(&g, &t[0])
            .unwrap()
            .iter()
            .map(|r| g.cfgs[&(r.function.clone(), r.occurrence)].nodes[0].label.split('#').next().unwrap().to_string())
            .collect();
        let cg = &g.callgraph;
        let n = cg.nodes.len();
        let mut bigger = cg.clone();
        bigger.edges.push(GraphEdge { from: cg.nodes[a % n].node_id.clone(), to: cg.nodes[b % n].node_id.clone(), indirect: false });
        for node in &cg.nodes {
            let before = function_distance(cg, &node.label, &targets);
            let after = function_distance(&bigger, &node.label, &targets);
            match (before, after) {
                (Some(x), Some(y)) => prop_assert!(y <= x),
                (Some(_), None) => prop_assert!(false, "edge made {} unreachable", node.label),
                _ => {}
            }
        }
    }

    #[test]
    fn duplicate_copies_each_get_a_target_block(k in 1usize..6) {
        let names: Vec<String> = (0..k).map(|i| format!("I{i}")).collect();
        let calls: String = names.iter().map(|n| format!("    h[{n}]()\n")).collect();
        let src = format!("func h[{}]() {{\n    if input(0) == 9 {{\n        panic(\"t\")\n    }}\n}}\nfunc main() {{\n{calls}}}\n", names.join(", "));
        let g = graphs(&src);
        let ets = compute_ets(&g, &[target("p.mp", 3)]).unwrap();
        prop_assert_eq!(ets.blocks.iter().filter(|b| b.weight == 1.0).count(), k);
    }
}
