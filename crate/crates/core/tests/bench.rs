use difuzz_core::bench::suite::{self, MAGIC};
use difuzz_core::bench::{
    avg_text, cell_text, matrix, median, prepare_program, render_report, run_bench, run_trials, BenchConfig,
    BenchMatrix, ProgramSpec, ReportFormat, TteCell,
};
use difuzz_core::engine::{Clock, Mode};
use proptest::prelude::*;

fn cell(trials: &[Option<f64>]) -> TteCell {
    TteCell::from_trials(trials)
}

#[test]
fn censored_statistics() {
    let mut t: Vec<Option<f64>> = (1..=9).map(|x| Some(x as f64)).collect();
    t.push(None);
    let c = cell(&t);
    assert_eq!(c.best_s, Some(1.0));
    assert_eq!(c.avg_s, Some(5.0));
    assert_eq!(c.timeout_pct, 10.0);
    assert_eq!(avg_text(&c), "5.0 (10% TO)");
}

#[test]
fn all_timeouts_render_as_to() {
    let c = cell(&[None, None, None]);
    assert_eq!(c.best_s, None);
    assert_eq!(c.avg_s, None);
    assert_eq!(c.timeout_pct, 100.0);
    assert_eq!(cell_text(&c), "TO | TO (100% TO)");
}

#[test]
fn single_trial_cell() {
    let c = cell(&[Some(2.3)]);
    assert_eq!((c.best_s, c.avg_s, c.timeout_pct), (Some(2.3), Some(2.3), 0.0));
}

#[test]
fn cell_text_variants() {
    let c = TteCell { best_s: Some(0.5), avg_s: Some(7.9), median_s: None, timeout_pct: 0.0, trials: vec![] };
    assert_eq!(cell_text(&c), "0.5 | 7.9");
    let c = TteCell { best_s: Some(23.0), avg_s: None, median_s: None, timeout_pct: 90.0, trials: vec![] };
    assert_eq!(avg_text(&c), "TO (90% TO)");
    let c = TteCell { best_s: Some(3.0), avg_s: Some(25.4), median_s: None, timeout_pct: 20.0, trials: vec![] };
    assert_eq!(avg_text(&c), "25.4 (20% TO)");
    let c = cell(&[Some(1.0), Some(2.0), None, None, None, None, None, None]);
    assert_eq!(avg_text(&c), "1.5 (75% TO)");
    let c = cell(&[Some(1.0), None, Some(1.0), Some(1.0), Some(1.0), Some(1.0), Some(1.0), Some(1.0)]);
    assert_eq!(avg_text(&c), "1.0 (12.5% TO)");
}

#[test]
fn medians_rank_timeouts_last() {
    assert_eq!(median(&[Some(3.0), None, Some(1.0)]), Some(3.0));
    assert_eq!(median(&[Some(3.0), None, None]), None);
    assert_eq!(median(&[Some(1.0), Some(2.0), Some(4.0), Some(8.0)]), Some(3.0));
    assert_eq!(median(&[]), None);
}

#[test]
fn empty_matrix_renders_headers_only() {
    let m = BenchMatrix { modes: vec![Mode::Directed, Mode::Coverage], rows: vec![] };
    assert_eq!(render_report(&m, ReportFormat::Text).lines().count(), 1);
    assert_eq!(render_report(&m, ReportFormat::Csv).lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&render_report(&m, ReportFormat::Json)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 0);
}

proptest! {
    #[test]
    fn cell_invariants(trials in proptest::collection::vec(proptest::option::of(0.0f64..1000.0), 1..40)) {
        let c = cell(&trials);
        if let (Some(b), Some(a)) = (c.best_s, c.avg_s) {
            prop_assert!(b <= a + 1e-9);
        }
        let timeouts = trials.iter().filter(|t| t.is_none()).count();
        prop_assert_eq!(c.timeout_pct, 100.0 * timeouts as f64 / trials.len() as f64);
        if timeouts == trials.len() {
            prop_assert!(c.best_s.is_none() && c.avg_s.is_none());
        }
        let csv = render_report(&BenchMatrix { modes: vec![Mode::Directed], rows: vec![] }, ReportFormat::Csv);
        prop_assert!(csv.starts_with("target,"));
    }
}

fn exec_config(trials: usize) -> BenchConfig {
    BenchConfig { trials, clock: Clock::Executions { per_second: 1_000_000.0 }, ..Default::default() }
}

fn prepared(names: &[&str], dir: &std::path::Path) -> Vec<difuzz_core::bench::PreparedTarget> {
    let mut out = Vec::new();
    for n in names {
        let p = suite::find(n).unwrap();
        suite::write_program(dir, &p).unwrap();
        let spec = ProgramSpec { name: n.to_string(), source: n.into(), targets: format!("{n}/targets.tsv").into() };
        out.extend(prepare_program(&spec, dir).unwrap());
    }
    out
}

#[test]
fn magic_crash_contains_the_magic_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let targets = prepared(&["b_magic4"], dir.path());
    let cfg = exec_config(2);
    for t in run_trials(&cfg, &targets).unwrap() {
        assert!(t.validated);
        let input = t.result.crash_input.unwrap();
        assert_eq!(&input[..4], &MAGIC[..4]);
    }
}

#[test]
fn shallow_and_dead_code_controls() {
    let dir = tempfile::tempdir().unwrap();
    let mut targets = prepared(&["a_shallow", "e_dead_code"], dir.path());
    targets[1].target.timeout_s = 0.05;
    let cfg = exec_config(3);
    let trials = run_trials(&cfg, &targets).unwrap();
    let m = matrix(&cfg, &targets, &trials);
    for mode in [Mode::Directed, Mode::Coverage] {
        assert!(m.cell("a1", mode).unwrap().best_s.unwrap() < 5.0);
        assert_eq!(m.cell("e1", mode).unwrap().timeout_pct, 100.0);
    }
    assert!(render_report(&m, ReportFormat::Text).contains("TO | TO (100% TO)"));
}

#[test]
fn difficulty_grows_with_depth() {
    let dir = tempfile::tempdir().unwrap();
    let targets = prepared(&["b_magic2", "b_magic4", "b_magic8"], dir.path());
    let cfg = exec_config(10);
    let trials = run_trials(&cfg, &targets).unwrap();
    let m = matrix(&cfg, &targets, &trials);
    for mode in [Mode::Directed, Mode::Coverage] {
        let med: Vec<f64> = ["b2", "b4", "b8"].iter().map(|t| m.cell(t, mode).unwrap().median_s.unwrap()).collect();
        assert!(med[0] <= med[1] && med[1] <= med[2], "{mode:?} {med:?}");
    }
}

#[test]
fn suite_layout_and_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let programs = suite::write_suite(dir.path()).unwrap();
    assert_eq!(programs.len(), 7);
    let mut cfg = BenchConfig::read(&dir.path().join("bench.toml")).unwrap();
    assert_eq!(cfg.programs.len(), 7);
    assert_eq!(cfg.trials, 10);
    cfg.programs.retain(|p| p.name == "a_shallow" || p.name == "b_magic2");
    cfg.trials = 2;
    cfg.clock = Clock::Executions { per_second: 1_000_000.0 };
    let out = dir.path().join("report");
    let m = run_bench(&cfg, dir.path(), Some(&out)).unwrap();
    assert_eq!(m.rows.len(), 2);
    for f in ["report.txt", "report.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(out.join("trials/a1/directed/trial_000/campaign.json").exists());
    assert!(out.join("trials/b2/coverage/trial_001/campaign.json").exists());
    let json: BenchMatrix = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json, m);
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}

#[test]
fn config_errors() {
    assert!(BenchConfig::from_toml_str("trials = 0\n", "b.toml").is_err());
    assert!(BenchConfig::from_toml_str("bogus = 1\n", "b.toml").is_err());
    assert!(BenchConfig::from_toml_str("modes = [\"sideways\"]\n", "b.toml").is_err());
    let c = BenchConfig::from_toml_str("[clock]\nkind = \"executions\"\nper_second = 10.0\n", "b.toml").unwrap();
    assert_eq!(c.clock, Clock::Executions { per_second: 10.0 });
}

#[test]
fn missing_program_is_a_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ProgramSpec { name: "x".into(), source: "nope".into(), targets: "nope/targets.tsv".into() };
    let e = prepare_program(&spec, dir.path()).unwrap_err();
    assert!(e.to_string().contains("load"));
}
