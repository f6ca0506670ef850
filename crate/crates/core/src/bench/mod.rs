//! Time-to-exposure experiments: repeated campaigns per target and mode.

mod report;
mod stats;
pub mod suite;

pub use report::{render_report, BenchMatrix, BenchRow, ReportFormat};
pub use stats::{avg_text, best_text, cell_text, format_pct, format_seconds, median, TteCell};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    fuzz_loop, validate_crash, write_campaign, CampaignResult, Clock, ExecLimits, FuzzConfig, Mode, ScheduleConfig,
};
use crate::graph::build_graphs;
use crate::instrument::InstrumentedProgram;
use crate::minilang::load_dir;
use crate::preprocess::{compute_ets, read_targets, EnhancedTargetSequence, TargetPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramSpec {
    pub name: String,
    /// Directory of `.mp` sources, relative to the config file.
    pub source: PathBuf,
    /// Target file, relative to the config file.
    pub targets: PathBuf,
}

fn default_trials() -> usize {
    10
}
fn default_jobs() -> usize {
    1
}
fn default_modes() -> Vec<Mode> {
    vec![Mode::Directed, Mode::Coverage]
}
fn default_step_limit() -> u64 {
    ExecLimits::default().step_limit
}
fn default_clock() -> Clock {
    Clock::Wall
}

/// Contents of `bench.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub rng_seed_base: u64,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_step_limit")]
    pub step_limit: u64,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default = "default_clock")]
    pub clock: Clock,
    #[serde(default, rename = "program")]
    pub programs: Vec<ProgramSpec>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            jobs: default_jobs(),
            rng_seed_base: 0,
            modes: default_modes(),
            step_limit: default_step_limit(),
            schedule: ScheduleConfig::default(),
            clock: default_clock(),
            programs: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("target {target}: {stage} failed: {message}")]
    Pipeline { target: String, stage: &'static str, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl BenchConfig {
    pub fn from_toml_str(text: &str, path: &str) -> Result<Self, BenchError> {
        let cfg: BenchConfig =
            toml::from_str(text).map_err(|e| BenchError::Config { path: path.into(), message: e.to_string() })?;
        cfg.check().map_err(|message| BenchError::Config { path: path.into(), message })?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn check(&self) -> Result<(), String> {
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if self.jobs == 0 {
            return Err("jobs must be at least 1".into());
        }
        if self.modes.is_empty() {
            return Err("no modes".into());
        }
        Ok(())
    }

    pub fn fuzz_config(&self, mode: Mode, timeout_s: f64, trial: usize) -> FuzzConfig {
        FuzzConfig {
            schedule: self.schedule,
            clock: self.clock,
            limits: ExecLimits { step_limit: self.step_limit },
            ..FuzzConfig::new(mode, timeout_s, self.rng_seed_base + trial as u64)
        }
    }
}

/// One target ready to fuzz.
#[derive(Debug, Clone)]
pub struct PreparedTarget {
    pub program: String,
    pub target: TargetPoint,
    pub ets: EnhancedTargetSequence,
    pub instrumented: InstrumentedProgram,
}

fn pipeline(target: &str, stage: &'static str, e: impl std::fmt::Display) -> BenchError {
    BenchError::Pipeline { target: target.into(), stage, message: e.to_string() }
}

/// Preprocess and instrument every target of `spec`, one ETS per target.
pub fn prepare_program(spec: &ProgramSpec, base: &Path) -> Result<Vec<PreparedTarget>, BenchError> {
    let ast = load_dir(&base.join(&spec.source)).map_err(|e| pipeline(&spec.name, "load", e))?;
    let targets = read_targets(&base.join(&spec.targets)).map_err(|e| pipeline(&spec.name, "targets", e))?;
    let graphs = build_graphs(&ast);
    targets
        .into_iter()
        .map(|t| {
            if !(t.timeout_s > 0.0) {
                return Err(pipeline(&t.id, "targets", "timeout must be positive"));
            }
            let ets = compute_ets(&graphs, std::slice::from_ref(&t)).map_err(|e| pipeline(&t.id, "preprocess", e))?;
            let instrumented = InstrumentedProgram::build(&ast, &ets).map_err(|e| pipeline(&t.id, "instrument", e))?;
            Ok(PreparedTarget { program: spec.name.clone(), target: t, ets, instrumented })
        })
        .collect()
}

/// Outcome of one campaign after the validation gate.
#[derive(Debug, Clone)]
pub struct Trial {
    pub target: usize,
    pub mode: Mode,
    pub index: usize,
    pub result: CampaignResult,
    /// Whether the crash input re-executed into the target block.
    pub validated: bool,
}

impl Trial {
    pub fn tte(&self) -> Option<f64> {
        if self.validated {
            self.result.tte_s
        } else {
            None
        }
    }
}

/// Run `config.trials` campaigns per (target, mode). Trials run on a pool of
/// `config.jobs` threads.
pub fn run_trials(config: &BenchConfig, targets: &[PreparedTarget]) -> Result<Vec<Trial>, BenchError> {
    config.check().map_err(|message| BenchError::Config { path: "<config>".into(), message })?;
    let work: Vec<(usize, Mode, usize)> = (0..targets.len())
        .flat_map(|t| config.modes.iter().flat_map(move |&m| (0..config.trials).map(move |i| (t, m, i))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| BenchError::Config { path: "<config>".into(), message: e.to_string() })?;
    pool.install(|| {
        work.par_iter()
            .map(|&(t, mode, index)| {
                let p = &targets[t];
                let cfg = config.fuzz_config(mode, p.target.timeout_s, index);
                let result = fuzz_loop(&p.instrumented, &p.ets, &cfg).map_err(|e| pipeline(&p.target.id, "fuzz", e))?;
                let validated = result.found() && validate_crash(&p.instrumented, &result, &p.ets, cfg.limits);
                Ok(Trial { target: t, mode, index, result, validated })
            })
            .collect()
    })
}

/// Aggregate trials into the report matrix.
pub fn matrix(config: &BenchConfig, targets: &[PreparedTarget], trials: &[Trial]) -> BenchMatrix {
    let rows = targets
        .iter()
        .enumerate()
        .map(|(t, p)| BenchRow {
            target: p.target.id.clone(),
            program: p.program.clone(),
            timeout_s: p.target.timeout_s,
            cells: config
                .modes
                .iter()
                .map(|&m| {
                    let mut mine: Vec<&Trial> = trials.iter().filter(|x| x.target == t && x.mode == m).collect();
                    mine.sort_by_key(|x| x.index);
                    TteCell::from_trials(&mine.iter().map(|x| x.tte()).collect::<Vec<_>>())
                })
                .collect(),
        })
        .collect();
    BenchMatrix { modes: config.modes.clone(), rows }
}

/// `difuzz bench`: run everything listed in `config` (paths relative to
/// `base`); when `out` is given, write the reports and per-trial campaigns.
pub fn run_bench(config: &BenchConfig, base: &Path, out: Option<&Path>) -> Result<BenchMatrix, BenchError> {
    let mut targets = Vec::new();
    for spec in &config.programs {
        targets.extend(prepare_program(spec, base)?);
    }
    let trials = run_trials(config, &targets)?;
    let m = matrix(config, &targets, &trials);
    if let Some(out) = out {
        write_outputs(out, &m, &targets, &trials)?;
    }
    Ok(m)
}

pub fn write_outputs(out: &Path, m: &BenchMatrix, targets: &[PreparedTarget], trials: &[Trial]) -> Result<(), BenchError> {
    let io = |p: &Path, e: &dyn std::fmt::Display| BenchError::Io { path: p.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(out).map_err(|e| io(out, &e))?;
    for f in ReportFormat::ALL {
        let p = out.join(format!("report.{}", f.extension()));
        std::fs::write(&p, render_report(m, f)).map_err(|e| io(&p, &e))?;
    }
    for t in trials {
        let dir = out
            .join("trials")
            .join(&targets[t.target].target.id)
            .join(t.mode.name())
            .join(format!("trial_{:03}", t.index));
        write_campaign(&dir, &t.result).map_err(|e| io(&dir, &e))?;
    }
    Ok(())
}
