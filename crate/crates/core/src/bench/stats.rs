use serde::{Deserialize, Serialize};

/// TTE statistics of one (target, mode) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TteCell {
    pub best_s: Option<f64>,
    /// Mean over the trials that did not time out.
    pub avg_s: Option<f64>,
    pub median_s: Option<f64>,
    pub timeout_pct: f64,
    /// Per-trial TTE, `None` for a timeout.
    pub trials: Vec<Option<f64>>,
}

impl TteCell {
    pub fn from_trials(trials: &[Option<f64>]) -> Self {
        let found: Vec<f64> = trials.iter().flatten().copied().collect();
        let timeouts = trials.len() - found.len();
        let best_s = found.iter().copied().reduce(f64::min);
        let avg_s = (!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64);
        let timeout_pct = if trials.is_empty() { 0.0 } else { 100.0 * timeouts as f64 / trials.len() as f64 };
        Self { best_s, avg_s, median_s: median(trials), timeout_pct, trials: trials.to_vec() }
    }

    pub fn timeouts(&self) -> usize {
        self.trials.iter().filter(|t| t.is_none()).count()
    }
}

/// Median with timeouts ranked above every finite time; `None` when the
/// median itself is a timeout.
pub fn median(trials: &[Option<f64>]) -> Option<f64> {
    if trials.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = trials.iter().map(|t| t.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
    m.is_finite().then_some(m)
}

pub fn format_seconds(s: f64) -> String {
    format!("{s:.1}")
}

pub fn format_pct(p: f64) -> String {
    if p.fract() == 0.0 {
        format!("{p:.0}")
    } else {
        format!("{p:.1}")
    }
}

/// Text of the best column: seconds, or `TO` when every trial timed out.
pub fn best_text(cell: &TteCell) -> String {
    cell.best_s.map_or_else(|| "TO".to_string(), format_seconds)
}

/// Text of the avg column: `7.9`, `25.4 (20% TO)` or `TO (90% TO)`.
pub fn avg_text(cell: &TteCell) -> String {
    match cell.avg_s {
        None => format!("TO ({}% TO)", format_pct(cell.timeout_pct)),
        Some(a) if cell.timeout_pct > 0.0 => format!("{} ({}% TO)", format_seconds(a), format_pct(cell.timeout_pct)),
        Some(a) => format_seconds(a),
    }
}

/// `best | avg` as one table cell pair.
pub fn cell_text(cell: &TteCell) -> String {
    format!("{} | {}", best_text(cell), avg_text(cell))
}
