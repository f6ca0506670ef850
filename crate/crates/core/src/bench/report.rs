use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::stats::{cell_text, TteCell};
use crate::engine::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub target: String,
    pub program: String,
    pub timeout_s: f64,
    /// One cell per mode of the matrix, in the same order.
    pub cells: Vec<TteCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMatrix {
    pub modes: Vec<Mode>,
    pub rows: Vec<BenchRow>,
}

impl BenchMatrix {
    pub fn cell(&self, target: &str, mode: Mode) -> Option<&TteCell> {
        let m = self.modes.iter().position(|x| *x == mode)?;
        self.rows.iter().find(|r| r.target == target).map(|r| &r.cells[m])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Text, ReportFormat::Csv, ReportFormat::Json];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

pub fn render_report(matrix: &BenchMatrix, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(matrix),
        ReportFormat::Csv => render_csv(matrix),
        ReportFormat::Json => serde_json::to_string_pretty(matrix).expect("matrix serializes") + "\n",
    }
}

fn render_text(matrix: &BenchMatrix) -> String {
    let mut out = String::from("TP ID");
    for m in &matrix.modes {
        write!(out, " | {0} best, s | {0} avg, s", m.name()).unwrap();
    }
    out.push('\n');
    for row in &matrix.rows {
        out.push_str(&row.target);
        for cell in &row.cells {
            write!(out, " | {}", cell_text(cell)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn render_csv(matrix: &BenchMatrix) -> String {
    let mut out = String::from("target,program,mode,trials,timeouts,best_s,avg_s,median_s,timeout_pct\n");
    for row in &matrix.rows {
        for (mode, cell) in matrix.modes.iter().zip(&row.cells) {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.target,
                row.program,
                mode.name(),
                cell.trials.len(),
                cell.timeouts(),
                opt(cell.best_s),
                opt(cell.avg_s),
                opt(cell.median_s),
                cell.timeout_pct
            )
            .unwrap();
        }
    }
    out
}
