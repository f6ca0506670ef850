use std::path::Path;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::executor::{ExecLimits, Executor};
use super::feedback::{best_weight, seed_distance, CoverageHistory, EtsHistory, EtsWeights};
use super::mutate::mutate;
use super::schedule::{annealing_energy, mutation_budget, ScheduleConfig, SchedulerState};
use crate::instrument::InstrumentedProgram;
use crate::minilang::ast::SourcePosition;
use crate::minilang::{ExecStatus, NoHooks};
use crate::preprocess::{EnhancedTargetSequence, TargetPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Directed,
    Coverage,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Directed => "directed",
            Mode::Coverage => "coverage",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "directed" => Ok(Mode::Directed),
            "coverage" | "coverage-only" => Ok(Mode::Coverage),
            _ => Err(format!("unknown mode `{s}` (expected directed or coverage)")),
        }
    }
}

/// Campaign clock: real time, or executions divided by a nominal rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clock {
    Wall,
    Executions { per_second: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzConfig {
    pub mode: Mode,
    pub timeout_s: f64,
    pub rng_seed: u64,
    pub schedule: ScheduleConfig,
    pub clock: Clock,
    pub limits: ExecLimits,
    /// Extra initial inputs besides the empty one.
    pub seeds: Vec<Vec<u8>>,
}

impl FuzzConfig {
    pub fn new(mode: Mode, timeout_s: f64, rng_seed: u64) -> Self {
        Self {
            mode,
            timeout_s,
            rng_seed,
            schedule: ScheduleConfig::default(),
            clock: Clock::Wall,
            limits: ExecLimits::default(),
            seeds: Vec::new(),
        }
    }

    fn validate(&self) -> Result<(), FuzzError> {
        let bad = |m: &str| Err(FuzzError::Config(m.to_string()));
        if !(self.timeout_s > 0.0) {
            return bad("timeout must be positive");
        }
        if !(self.schedule.t_exploit_s > 0.0) {
            return bad("exploitation time must be positive");
        }
        if !(self.schedule.cooling_base > 1.0) {
            return bad("cooling base must exceed 1");
        }
        if self.schedule.budget_base == 0 {
            return bad("budget base must be positive");
        }
        if let Clock::Executions { per_second } = self.clock {
            if !(per_second > 0.0) {
                return bad("execution rate must be positive");
            }
        }
        if self.limits.step_limit == 0 {
            return bad("step limit must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FuzzError {
    #[error("invalid fuzz configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Which feedback admitted an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Novelty {
    Initial,
    Coverage,
    Ets,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub input: Vec<u8>,
    pub exec_us: u64,
    /// `None` is infinite distance (no ETS block reached).
    pub seed_distance: Option<f64>,
    pub best_weight: Option<f64>,
    pub found_at_s: f64,
    pub found_at_exec: u64,
    pub novelty: Novelty,
}

/// Per-entry line of `campaign.json`; excludes timing so that runs on the
/// execution clock serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub index: usize,
    pub len: usize,
    pub fnv64: String,
    pub seed_distance: Option<f64>,
    pub best_weight: Option<f64>,
    pub found_at_s: f64,
    pub found_at_exec: u64,
    pub novelty: Novelty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub mode: Mode,
    pub rng_seed: u64,
    pub clock: Clock,
    pub timeout_s: f64,
    /// Time to exposure; `None` when the campaign timed out.
    pub tte_s: Option<f64>,
    pub tte_executions: Option<u64>,
    pub target_id: Option<String>,
    pub crash_input: Option<Vec<u8>>,
    pub crash_position: Option<SourcePosition>,
    pub executions: u64,
    pub elapsed_s: f64,
    pub corpus_size: usize,
    /// Panics outside every target block.
    pub rejected_crashes: u64,
    /// Executions stopped by the step limit.
    pub hangs: u64,
    pub edges: usize,
    pub ets_blocks_seen: usize,
    pub corpus: Vec<CorpusSummary>,
    #[serde(skip)]
    pub entries: Vec<CorpusEntry>,
}

impl CampaignResult {
    pub fn found(&self) -> bool {
        self.tte_s.is_some()
    }
}

pub fn fnv64(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Target reached by a panic at `position`: the panic must lie in a
/// distance-0 ETS block that contains the target line.
pub fn crash_target<'a>(position: &SourcePosition, ets: &'a EnhancedTargetSequence) -> Option<&'a TargetPoint> {
    ets.blocks
        .iter()
        .filter(|b| b.weight == 1.0 && b.contains(&position.file, position.line))
        .find_map(|b| ets.targets_in(b).next())
}

/// Re-run `input` and report the target its panic reaches, if any.
pub fn validate_input<'a>(
    program: &InstrumentedProgram,
    input: &[u8],
    ets: &'a EnhancedTargetSequence,
    limits: ExecLimits,
) -> Option<&'a TargetPoint> {
    match program.run(input, limits.step_limit, &mut NoHooks).status {
        ExecStatus::Panic { position, .. } => crash_target(&position, ets),
        _ => None,
    }
}

/// Re-execute the stored crash input of `result`.
pub fn validate_crash(
    program: &InstrumentedProgram,
    result: &CampaignResult,
    ets: &EnhancedTargetSequence,
    limits: ExecLimits,
) -> bool {
    result.crash_input.as_ref().is_some_and(|input| validate_input(program, input, ets, limits).is_some())
}

fn clock_reading(clock: Clock, start: Instant, executions: u64) -> f64 {
    match clock {
        Clock::Wall => start.elapsed().as_secs_f64(),
        Clock::Executions { per_second } => executions as f64 / per_second,
    }
}

struct Campaign<'a> {
    cfg: &'a FuzzConfig,
    ets: &'a EnhancedTargetSequence,
    weights: EtsWeights,
    exec: Executor<'a>,
    rng: ChaCha8Rng,
    corpus: Vec<CorpusEntry>,
    coverage: CoverageHistory,
    ets_history: EtsHistory,
    start: Instant,
    rejected: u64,
    hangs: u64,
    crash: Option<(Vec<u8>, SourcePosition, String, f64, u64)>,
}

impl Campaign<'_> {
    fn elapsed(&self) -> f64 {
        clock_reading(self.cfg.clock, self.start, self.exec.executions)
    }

    /// Execute one input; returns true when a target crash ends the campaign.
    fn step(&mut self, input: Vec<u8>, initial: bool) -> bool {
        let directed = self.cfg.mode == Mode::Directed;
        let executions = self.exec.executions + 1;
        let obs = self.exec.run(&input);
        let now = clock_reading(self.cfg.clock, self.start, executions);
        if let ExecStatus::Panic { position, .. } = &obs.outcome.status {
            match crash_target(position, self.ets) {
                Some(t) => {
                    let (position, id) = (position.clone(), t.id.clone());
                    self.crash = Some((input, position, id, now, executions));
                    return true;
                }
                None => self.rejected += 1,
            }
        }
        if obs.timed_out() {
            self.hangs += 1;
            if !initial {
                return false;
            }
        }
        let cov = self.coverage.is_novel(obs.coverage);
        let ets = directed && self.ets_history.is_novel(obs.trace, &self.weights);
        if !(initial || cov || ets) {
            return false;
        }
        let novelty = match (initial, cov, ets) {
            (true, _, _) => Novelty::Initial,
            (_, true, true) => Novelty::Both,
            (_, true, false) => Novelty::Coverage,
            _ => Novelty::Ets,
        };
        self.corpus.push(CorpusEntry {
            exec_us: obs.duration.as_micros() as u64,
            seed_distance: seed_distance(obs.trace, &self.weights),
            best_weight: best_weight(obs.trace, &self.weights),
            found_at_s: now,
            found_at_exec: executions,
            novelty,
            input,
        });
        false
    }

    fn pick(&mut self, round: &mut usize) -> (usize, u32) {
        match self.cfg.mode {
            Mode::Coverage => {
                let i = *round % self.corpus.len();
                *round += 1;
                (i, self.cfg.schedule.budget_base)
            }
            Mode::Directed => {
                let state = SchedulerState::new(self.elapsed(), &self.cfg.schedule)
                    .with_bounds(self.corpus.iter().map(|e| e.seed_distance));
                let energies: Vec<f64> = self.corpus.iter().map(|e| annealing_energy(e.seed_distance, &state)).collect();
                let i = match WeightedIndex::new(&energies) {
                    Ok(w) => w.sample(&mut self.rng),
                    Err(_) => self.rng.random_range(0..self.corpus.len()),
                };
                (i, mutation_budget(energies[i], &self.cfg.schedule))
            }
        }
    }

    fn run(&mut self) {
        let mut initial = vec![Vec::new()];
        initial.extend(self.cfg.seeds.iter().cloned());
        for input in initial {
            if self.step(input, true) {
                return;
            }
        }
        let mut round = 0;
        while self.elapsed() < self.cfg.timeout_s {
            let (parent, budget) = self.pick(&mut round);
            for _ in 0..budget {
                if self.elapsed() >= self.cfg.timeout_s {
                    return;
                }
                let donors: Vec<&[u8]> = self.corpus.iter().map(|e| e.input.as_slice()).collect();
                let child = mutate(&self.corpus[parent].input, &mut self.rng, &donors);
                if self.step(child, false) {
                    return;
                }
            }
        }
    }
}

/// Fuzz `program` until a panic inside a target block or the timeout.
pub fn fuzz_loop(
    program: &InstrumentedProgram,
    ets: &EnhancedTargetSequence,
    cfg: &FuzzConfig,
) -> Result<CampaignResult, FuzzError> {
    cfg.validate()?;
    let mut c = Campaign {
        cfg,
        ets,
        weights: EtsWeights::new(ets),
        exec: Executor::new(program, cfg.limits),
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        corpus: Vec::new(),
        coverage: CoverageHistory::default(),
        ets_history: EtsHistory::default(),
        start: Instant::now(),
        rejected: 0,
        hangs: 0,
        crash: None,
    };
    c.run();
    let elapsed_s = c.elapsed();
    let corpus = c
        .corpus
        .iter()
        .enumerate()
        .map(|(index, e)| CorpusSummary {
            index,
            len: e.input.len(),
            fnv64: format!("{:016x}", fnv64(&e.input)),
            seed_distance: e.seed_distance,
            best_weight: e.best_weight,
            found_at_s: e.found_at_s,
            found_at_exec: e.found_at_exec,
            novelty: e.novelty,
        })
        .collect();
    let (crash_input, crash_position, target_id, tte_s, tte_executions) = match c.crash {
        Some((i, p, t, s, n)) => (Some(i), Some(p), Some(t), Some(s), Some(n)),
        None => (None, None, None, None, None),
    };
    Ok(CampaignResult {
        mode: cfg.mode,
        rng_seed: cfg.rng_seed,
        clock: cfg.clock,
        timeout_s: cfg.timeout_s,
        tte_s,
        tte_executions,
        target_id,
        crash_input,
        crash_position,
        executions: c.exec.executions,
        elapsed_s,
        corpus_size: c.corpus.len(),
        rejected_crashes: c.rejected,
        hangs: c.hangs,
        edges: c.coverage.edges(),
        ets_blocks_seen: c.ets_history.seen_blocks(),
        corpus,
        entries: c.corpus,
    })
}

fn io(path: &Path, e: impl std::fmt::Display) -> FuzzError {
    FuzzError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Write `campaign.json`, `corpus/` and `crash/` under `dir`.
pub fn write_campaign(dir: &Path, result: &CampaignResult) -> Result<(), FuzzError> {
    let corpus_dir = dir.join("corpus");
    let crash_dir = dir.join("crash");
    for d in [dir, &corpus_dir, &crash_dir] {
        std::fs::create_dir_all(d).map_err(|e| io(d, e))?;
    }
    for (i, e) in result.entries.iter().enumerate() {
        let p = corpus_dir.join(format!("id_{i:06}"));
        std::fs::write(&p, &e.input).map_err(|e| io(&p, e))?;
    }
    if let Some(input) = &result.crash_input {
        let p = crash_dir.join("crash_000000");
        std::fs::write(&p, input).map_err(|e| io(&p, e))?;
    }
    let p = dir.join("campaign.json");
    let json = serde_json::to_string_pretty(result).map_err(|e| io(&p, e))?;
    std::fs::write(&p, json + "\n").map_err(|e| io(&p, e))
}
