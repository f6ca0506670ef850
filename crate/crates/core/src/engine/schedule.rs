use serde::{Deserialize, Serialize};

/// Knobs of the annealing power schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Time after which exploitation dominates (`T = 1/20` at that point).
    pub t_exploit_s: f64,
    pub cooling_base: f64,
    pub budget_base: u32,
    pub budget_exponent: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { t_exploit_s: 0.2, cooling_base: 20.0, budget_base: 64, budget_exponent: 10.0 }
    }
}

/// `base^(-elapsed / t_exploit)`.
pub fn temperature(elapsed_s: f64, cfg: &ScheduleConfig) -> f64 {
    cfg.cooling_base.powf(-elapsed_s.max(0.0) / cfg.t_exploit_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerState {
    pub elapsed_s: f64,
    pub temperature: f64,
    /// Smallest and largest finite seed distance in the corpus.
    pub min_d: Option<f64>,
    pub max_d: Option<f64>,
}

impl SchedulerState {
    pub fn new(elapsed_s: f64, cfg: &ScheduleConfig) -> Self {
        Self { elapsed_s, temperature: temperature(elapsed_s, cfg), min_d: None, max_d: None }
    }

    /// Widen the distance bounds to include `d`.
    pub fn observe(&mut self, d: Option<f64>) {
        if let Some(d) = d {
            self.min_d = Some(self.min_d.map_or(d, |m| m.min(d)));
            self.max_d = Some(self.max_d.map_or(d, |m| m.max(d)));
        }
    }

    pub fn with_bounds<I: IntoIterator<Item = Option<f64>>>(mut self, distances: I) -> Self {
        for d in distances {
            self.observe(d);
        }
        self
    }

    /// Distance normalized into `[0, 1]`; infinite distance maps to 1.
    pub fn normalized(&self, d: Option<f64>) -> f64 {
        match (d, self.min_d, self.max_d) {
            (None, _, _) => 1.0,
            (Some(d), Some(lo), Some(hi)) if hi > lo => ((d - lo) / (hi - lo)).clamp(0.0, 1.0),
            _ => 0.0,
        }
    }
}

/// `(1 - D)(1 - T) + T/2` for normalized distance `D`.
pub fn annealing_energy(distance: Option<f64>, state: &SchedulerState) -> f64 {
    let t = state.temperature;
    let dn = state.normalized(distance);
    (1.0 - dn) * (1.0 - t) + 0.5 * t
}

/// `round(BASE * 2^(k (A - 1/2)))` clamped to `[1, 16 BASE]`.
pub fn mutation_budget(energy: f64, cfg: &ScheduleConfig) -> u32 {
    let base = cfg.budget_base as f64;
    let raw = (base * 2f64.powf(cfg.budget_exponent * (energy - 0.5))).round();
    raw.clamp(1.0, 16.0 * base) as u32
}
