//! The fuzzing engine: coverage and ETS feedback, the annealing power
//! schedule, havoc-style mutation and the campaign loop.

mod campaign;
mod executor;
mod feedback;
mod mutate;
mod schedule;

pub use campaign::{
    crash_target, fnv64, fuzz_loop, validate_crash, validate_input, write_campaign, CampaignResult, Clock,
    CorpusEntry, CorpusSummary, FuzzConfig, FuzzError, Mode, Novelty,
};
pub use executor::{execute, ExecLimits, Executor, Observation};
pub use feedback::{
    best_weight, bucket, coverage_is_novel, edge_index, ets_is_novel, seed_distance, CoverageHistory, CoverageMap,
    EtsHistory, EtsTrace, EtsWeights, ETS_TRACE_CAP, MAP_SIZE,
};
pub use mutate::{apply_op, mutate, MutationOp, MAX_INPUT_LEN};
pub use schedule::{annealing_energy, mutation_budget, temperature, ScheduleConfig, SchedulerState};
