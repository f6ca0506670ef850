use std::collections::BTreeMap;

use difuzz_core::engine::{
    annealing_energy, apply_op, bucket, coverage_is_novel, edge_index, ets_is_novel, execute, fuzz_loop, mutate,
    mutation_budget, seed_distance, temperature, validate_crash, Clock, CoverageHistory, EtsHistory, EtsTrace,
    EtsWeights, ExecLimits, FuzzConfig, Mode, MutationOp, Novelty, ScheduleConfig, SchedulerState, MAX_INPUT_LEN,
};
use difuzz_core::graph::build_graphs;
use difuzz_core::instrument::InstrumentedProgram;
use difuzz_core::minilang::{parse, RecordingHooks};
use difuzz_core::preprocess::{compute_ets, EnhancedTargetSequence, EtsBlock, TargetPoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn program(src: &str, target_line: Option<u32>) -> (InstrumentedProgram, EnhancedTargetSequence) {
    let ast = parse(src, "t.mp").unwrap();
    let targets: Vec<TargetPoint> = target_line
        .map(|line| TargetPoint { id: "t1".into(), file: "t.mp".into(), line, timeout_s: 5.0 })
        .into_iter()
        .collect();
    let ets = compute_ets(&build_graphs(&ast), &targets).unwrap();
    (InstrumentedProgram::build(&ast, &ets).unwrap(), ets)
}

/// Expected edge counts from a recorded guard sequence.
fn oracle_cells(guards: &[u32]) -> BTreeMap<usize, u32> {
    let mut cells = BTreeMap::new();
    let mut prev = 0u32;
    for &g in guards {
        *cells.entry((((prev >> 1) ^ g) & 0xFFFF) as usize).or_insert(0) += 1;
        prev = g;
    }
    cells
}

fn check_against_oracle(p: &InstrumentedProgram, input: &[u8]) -> BTreeMap<usize, u32> {
    let mut rec = RecordingHooks::default();
    p.run(input, 100_000, &mut rec);
    let expected = oracle_cells(&rec.guards);
    let (_, map, _) = execute(p, input, ExecLimits::default());
    let got: BTreeMap<usize, u32> = map.nonzero().map(|i| (i, map.count(i) as u32)).collect();
    let capped: BTreeMap<usize, u32> = expected.iter().map(|(k, v)| (*k, (*v).min(255))).collect();
    assert_eq!(got, capped);
    expected
}

const LINE3: &str = "func pad_a() {\n    print(0)\n}\nfunc pad_b() {\n    print(0)\n}\nfunc main() {\n    x = input(0)\n    if x == 1 {\n        print(1)\n    }\n    print(2)\n}\n";

#[test]
fn three_blocks_three_cells() {
    let (p, _) = program(LINE3, None);
    let cells = check_against_oracle(&p, &[1]);
    assert_eq!(cells.len(), 3);
}

#[test]
fn empty_body_touches_only_entry_edge() {
    let (p, _) = program("func main() {}\n", None);
    let (_, map, trace) = execute(&p, b"xyz", ExecLimits::default());
    let cells: Vec<usize> = map.nonzero().collect();
    assert_eq!(cells, vec![edge_index(0, 1)]);
    assert!(trace.is_empty());
}

#[test]
fn ten_iterations_land_in_the_8_to_15_bucket() {
    let src = "func main() {\n    i = 0\n    while i < 10 {\n        i = i + 1\n    }\n}\n";
    let (p, _) = program(src, None);
    let cells = check_against_oracle(&p, &[]);
    let (_, map, _) = execute(&p, &[], ExecLimits::default());
    let (&loop_cell, &n) = cells.iter().max_by_key(|(_, n)| **n).unwrap();
    assert!((8..=15).contains(&n), "{n}");
    assert_eq!(map.bucket_at(loop_cell), bucket(8));
}

#[test]
fn bucket_classes() {
    let classes: Vec<u8> = [0u8, 1, 2, 3, 4, 7, 8, 15, 16, 31, 32, 127, 128, 255].iter().map(|&c| bucket(c)).collect();
    assert_eq!(classes, vec![0, 1, 2, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8]);
}

#[test]
fn coverage_novelty_rules() {
    let src = "func main() {\n    i = 0\n    while i < input(0) {\n        i = i + 1\n    }\n}\n";
    let (p, _) = program(src, None);
    let mut hist = CoverageHistory::default();
    let (_, m2, _) = execute(&p, &[2], ExecLimits::default());
    assert!(coverage_is_novel(&m2, &mut hist));
    assert!(!coverage_is_novel(&m2, &mut hist));
    // Two iterations -> three: the self edge goes from count 1 to 2.
    let (_, m3, _) = execute(&p, &[3], ExecLimits::default());
    assert!(coverage_is_novel(&m3, &mut hist));
    let (_, m1, _) = execute(&p, &[1], ExecLimits::default());
    // One iteration only repeats edges already seen at the same count.
    assert!(!coverage_is_novel(&m1, &mut hist));
}

fn ets_of(weights: &[(u32, f64)]) -> EnhancedTargetSequence {
    EnhancedTargetSequence {
        targets: vec![],
        blocks: weights
            .iter()
            .map(|&(id, weight)| EtsBlock {
                block_id: id,
                file: "f".into(),
                function: "g".into(),
                occurrence: 0,
                cfg_block: id as usize,
                start_line: id,
                end_line: id,
                weight,
            })
            .collect(),
        max_block_distance: 3,
    }
}

fn trace(ids: &[u32]) -> EtsTrace {
    EtsTrace { hits: ids.to_vec(), truncated: false }
}

#[test]
fn seed_distance_examples() {
    let w = EtsWeights::new(&ets_of(&[(1, 1.0), (2, 0.5), (3, 0.25)]));
    assert_eq!(seed_distance(&trace(&[1]), &w), Some(0.0));
    assert_eq!(seed_distance(&trace(&[2, 3]), &w), Some(2.0));
    assert_eq!(seed_distance(&trace(&[2, 3, 3, 3, 2]), &w), Some(2.0));
    assert_eq!(seed_distance(&trace(&[]), &w), None);
}

#[test]
fn ets_novelty_rules() {
    let w = EtsWeights::new(&ets_of(&[(1, 1.0), (2, 0.5), (3, 0.5), (4, 0.25)]));
    let mut h = EtsHistory::default();
    assert!(!ets_is_novel(&trace(&[]), &w, &mut h));
    assert!(ets_is_novel(&trace(&[4]), &w, &mut h));
    assert!(!ets_is_novel(&trace(&[4]), &w, &mut h));
    assert!(ets_is_novel(&trace(&[4, 2]), &w, &mut h));
    // Same maximum weight, new block.
    assert!(ets_is_novel(&trace(&[3]), &w, &mut h));
    assert!(!ets_is_novel(&trace(&[2, 3, 4]), &w, &mut h));
    assert_eq!(h.best_weight, Some(0.5));
    assert!(ets_is_novel(&trace(&[1]), &w, &mut h));
    assert_eq!(h.best_weight, Some(1.0));
}

#[test]
fn ets_trace_is_capped() {
    let mut t = EtsTrace::default();
    for i in 0..70_000u32 {
        t.push(i % 7 + 1);
    }
    assert_eq!(t.hits.len(), 65_536);
    assert!(t.truncated);
}

#[test]
fn energy_and_budget_examples() {
    let state = SchedulerState { elapsed_s: 1.0, temperature: 0.5, min_d: Some(0.0), max_d: Some(10.0) };
    assert!((annealing_energy(Some(2.0), &state) - 0.65).abs() < 1e-12);
    let cfg = ScheduleConfig::default();
    assert_eq!(mutation_budget(0.5, &cfg), 64);
    assert_eq!(mutation_budget(0.6, &cfg), 128);
    assert_eq!(mutation_budget(0.0, &cfg), 2);
    assert_eq!(mutation_budget(1.0, &cfg), 1024);
    let start = SchedulerState::new(0.0, &cfg).with_bounds([Some(0.0), Some(5.0)]);
    assert_eq!(start.temperature, 1.0);
    for d in [None, Some(0.0), Some(2.5), Some(5.0)] {
        assert_eq!(annealing_energy(d, &start), 0.5);
    }
}

#[test]
fn equal_bounds_normalize_to_zero() {
    let s = SchedulerState { elapsed_s: 0.0, temperature: 0.0, min_d: Some(3.0), max_d: Some(3.0) };
    assert_eq!(annealing_energy(Some(3.0), &s), 1.0);
    assert_eq!(annealing_energy(None, &s), 0.0);
}

proptest! {
    #[test]
    fn temperature_strictly_decreases(a in 0.0f64..50.0, gap in 1e-6f64..50.0, tx in 0.5f64..100.0) {
        let cfg = ScheduleConfig { t_exploit_s: tx, ..Default::default() };
        let t1 = temperature(a, &cfg);
        let t2 = temperature(a + gap, &cfg);
        prop_assert!(t1 > t2);
        prop_assert!(t1 <= 1.0 && t2 > 0.0);
    }

    #[test]
    fn exploitation_limit_prefers_nearest(ds in proptest::collection::vec(proptest::option::weighted(0.8, 0.0f64..100.0), 1..30)) {
        let cfg = ScheduleConfig::default();
        let mut state = SchedulerState::new(0.0, &cfg).with_bounds(ds.iter().copied());
        state.temperature = 2f64.powi(-21);
        let energies: Vec<f64> = ds.iter().map(|d| annealing_energy(*d, &state)).collect();
        let best_e = energies.iter().copied().fold(f64::MIN, f64::max);
        let argmax = energies.iter().position(|e| *e == best_e).unwrap();
        let finite: Vec<(usize, f64)> = ds.iter().enumerate().filter_map(|(i, d)| d.map(|d| (i, d))).collect();
        if let Some(min_d) = finite.iter().map(|x| x.1).reduce(f64::min) {
            let argmin = finite.iter().find(|x| x.1 == min_d).unwrap().0;
            prop_assert_eq!(argmax, argmin);
        }
    }

    #[test]
    fn mutants_stay_in_bounds(seed in any::<u64>(), input in proptest::collection::vec(any::<u8>(), 0..64)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let donors: Vec<&[u8]> = vec![b"abc", b"0123456789"];
        let out = mutate(&input, &mut rng, &donors);
        prop_assert!(!out.is_empty() && out.len() <= MAX_INPUT_LEN);
    }
}

#[test]
fn mutation_is_reproducible() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..50).map(|_| mutate(&[0, 0], &mut rng, &[])).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn splice_joins_prefix_and_suffix() {
    let a = vec![b'A'; 16];
    let b = vec![b'B'; 16];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let mut out = a.clone();
        assert_eq!(apply_op(MutationOp::Splice, &mut out, &mut rng, &[&b]), MutationOp::Splice);
        let split = out.iter().position(|&c| c == b'B').unwrap();
        assert!(split >= 1);
        assert!(out[..split].iter().all(|&c| c == b'A'));
        assert!(out[split..].iter().all(|&c| c == b'B'));
    }
}

#[test]
fn splice_without_donor_falls_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut out = vec![1, 2, 3];
    assert_eq!(apply_op(MutationOp::Splice, &mut out, &mut rng, &[]), MutationOp::ByteSet);
    assert_eq!(out.len(), 3);
}

#[test]
fn growth_is_capped() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut out = vec![7u8; MAX_INPUT_LEN];
    for _ in 0..50 {
        apply_op(MutationOp::BlockDuplicate, &mut out, &mut rng, &[]);
        assert!(out.len() <= MAX_INPUT_LEN);
    }
}

const SEVEN: &str = "func main() {\n    if input(0) == 7 {\n        panic(\"seven\")\n    }\n}\n";

fn exec_clock(mode: Mode, seed: u64) -> FuzzConfig {
    FuzzConfig { clock: Clock::Executions { per_second: 1000.0 }, ..FuzzConfig::new(mode, 200.0, seed) }
}

#[test]
fn single_byte_target_is_found_in_both_modes() {
    let (p, ets) = program(SEVEN, Some(3));
    for mode in [Mode::Directed, Mode::Coverage] {
        let r = fuzz_loop(&p, &ets, &exec_clock(mode, 1)).unwrap();
        assert!(r.tte_s.is_some(), "{mode:?}");
        assert_eq!(r.crash_input.as_ref().unwrap()[0], 7);
        assert_eq!(r.target_id.as_deref(), Some("t1"));
        assert!(validate_crash(&p, &r, &ets, ExecLimits::default()));
    }
}

#[test]
fn dead_code_times_out() {
    let src = "func main() {\n    x = input(0)\n}\nfunc never() {\n    panic(\"x\")\n}\n";
    let (p, ets) = program(src, Some(5));
    let cfg = FuzzConfig { clock: Clock::Executions { per_second: 1000.0 }, ..FuzzConfig::new(Mode::Directed, 20.0, 5) };
    let r = fuzz_loop(&p, &ets, &cfg).unwrap();
    assert_eq!(r.tte_s, None);
    assert_eq!(r.executions, 20_000);
    assert!(!validate_crash(&p, &r, &ets, ExecLimits::default()));
}

#[test]
fn decoy_panics_are_rejected() {
    let src = "func main() {\n    if input(0) == 1 {\n        panic(\"decoy\")\n    }\n    if input(0) == 2 {\n        if input(1) == 9 {\n            panic(\"real\")\n        }\n    }\n}\n";
    let (p, ets) = program(src, Some(7));
    let r = fuzz_loop(&p, &ets, &exec_clock(Mode::Directed, 2)).unwrap();
    assert!(r.found());
    assert!(r.rejected_crashes > 0);
    assert_eq!(r.crash_position.as_ref().unwrap().line, 7);

    let mut fake = r.clone();
    fake.crash_input = Some(vec![1]);
    assert!(!validate_crash(&p, &fake, &ets, ExecLimits::default()));
    fake.crash_input = Some(vec![0]);
    assert!(!validate_crash(&p, &fake, &ets, ExecLimits::default()));
}

#[test]
fn execution_clock_runs_are_identical() {
    let src = "func main() {\n    if input(0) == 3 {\n        if input(1) == 4 {\n            if input(2) == 5 {\n                panic(\"deep\")\n            }\n        }\n    }\n}\n";
    let (p, ets) = program(src, Some(5));
    for mode in [Mode::Directed, Mode::Coverage] {
        let a = fuzz_loop(&p, &ets, &exec_clock(mode, 77)).unwrap();
        let b = fuzz_loop(&p, &ets, &exec_clock(mode, 77)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.found());
    }
}

#[test]
fn admitted_entries_replay_as_novel() {
    let src = "func main() {\n    i = 0\n    while i < input_len() {\n        if input(i) > 100 {\n            print(i)\n        }\n        i = i + 1\n    }\n    if input(0) == 1 && input(1) == 2 && input(2) == 3 && input(3) == 4 {\n        panic(\"x\")\n    }\n}\n";
    let (p, ets) = program(src, Some(10));
    let weights = EtsWeights::new(&ets);
    for mode in [Mode::Directed, Mode::Coverage] {
        let cfg = FuzzConfig { clock: Clock::Executions { per_second: 1000.0 }, ..FuzzConfig::new(mode, 30.0, 4) };
        let r = fuzz_loop(&p, &ets, &cfg).unwrap();
        assert!(r.corpus_size > 3);
        let mut cov = CoverageHistory::default();
        let mut eh = EtsHistory::default();
        for e in &r.entries {
            let (_, map, trace) = execute(&p, &e.input, ExecLimits::default());
            let c = coverage_is_novel(&map, &mut cov);
            let t = mode == Mode::Directed && ets_is_novel(&trace, &weights, &mut eh);
            assert!(e.novelty == Novelty::Initial || c || t);
            assert_eq!(e.seed_distance.is_some(), !trace.is_empty());
        }
    }
}

#[test]
fn bad_configuration_is_an_error() {
    let (p, ets) = program(SEVEN, Some(3));
    let mut cfg = FuzzConfig::new(Mode::Directed, 0.0, 1);
    assert!(fuzz_loop(&p, &ets, &cfg).is_err());
    cfg.timeout_s = 1.0;
    cfg.schedule.t_exploit_s = -1.0;
    assert!(fuzz_loop(&p, &ets, &cfg).is_err());
}

#[test]
fn random_inputs_give_sound_traces() {
    let (p, ets) = program(LINE3, Some(10));
    let ids: Vec<u32> = ets.blocks.iter().map(|b| b.block_id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let input: Vec<u8> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0..3)).collect();
        let (_, _, t) = execute(&p, &input, ExecLimits::default());
        assert!(t.hits.iter().all(|h| ids.contains(h)));
    }
}
