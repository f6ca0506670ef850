use std::time::{Duration, Instant};

use super::feedback::{CoverageMap, EtsTrace};
use crate::instrument::InstrumentedProgram;
use crate::minilang::{ExecOutcome, ExecStatus, Hooks};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecLimits {
    pub step_limit: u64,
}

impl Default for ExecLimits {
    fn default() -> Self {
        Self { step_limit: 100_000 }
    }
}

/// Receives the probes of one execution into the shared maps.
struct Observer<'a> {
    coverage: &'a mut CoverageMap,
    trace: &'a mut EtsTrace,
}

impl Hooks for Observer<'_> {
    fn on_start(&mut self) {
        self.coverage.reset();
        self.trace.clear();
    }
    fn on_guard(&mut self, id: u32) {
        self.coverage.guard(id);
    }
    fn on_ets(&mut self, id: u32) {
        self.trace.push(id);
    }
}

/// Result of one execution; the maps are owned by the executor and valid
/// until the next call.
#[derive(Debug)]
pub struct Observation<'a> {
    pub outcome: ExecOutcome,
    pub coverage: &'a CoverageMap,
    pub trace: &'a EtsTrace,
    pub duration: Duration,
}

impl Observation<'_> {
    pub fn timed_out(&self) -> bool {
        self.outcome.status == ExecStatus::StepLimitExceeded
    }
}

/// Runs inputs against an instrumented program, reusing its maps.
#[derive(Debug)]
pub struct Executor<'p> {
    program: &'p InstrumentedProgram,
    limits: ExecLimits,
    coverage: CoverageMap,
    trace: EtsTrace,
    pub executions: u64,
}

impl<'p> Executor<'p> {
    pub fn new(program: &'p InstrumentedProgram, limits: ExecLimits) -> Self {
        Self { program, limits, coverage: CoverageMap::new(), trace: EtsTrace::default(), executions: 0 }
    }

    pub fn program(&self) -> &InstrumentedProgram {
        self.program
    }

    pub fn run(&mut self, input: &[u8]) -> Observation<'_> {
        let start = Instant::now();
        let mut obs = Observer { coverage: &mut self.coverage, trace: &mut self.trace };
        let outcome = self.program.run(input, self.limits.step_limit, &mut obs);
        self.executions += 1;
        Observation { outcome, coverage: &self.coverage, trace: &self.trace, duration: start.elapsed() }
    }
}

/// Execute once with fresh maps.
pub fn execute(program: &InstrumentedProgram, input: &[u8], limits: ExecLimits) -> (ExecOutcome, CoverageMap, EtsTrace) {
    let mut coverage = CoverageMap::new();
    let mut trace = EtsTrace::default();
    let outcome = program.run(input, limits.step_limit, &mut Observer { coverage: &mut coverage, trace: &mut trace });
    (outcome, coverage, trace)
}
