//! `ets.toml` reading and writing.
//!
//! The writer produces the file by hand so that equal sequences always give
//! identical bytes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use super::{EnhancedTargetSequence, EtsBlock, PreprocessError, TargetPoint};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

/// Shortest decimal that reads back as `w`, padded to at least six
/// significant digits.
pub fn format_weight(w: f64) -> String {
    let mut s = format!("{w}");
    if !s.contains('.') {
        s.push('.');
    }
    let significant = s.trim_start_matches(['-', '0', '.']).chars().filter(char::is_ascii_digit).count();
    for _ in significant..6 {
        s.push('0');
    }
    s
}

fn float(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

pub fn to_toml_string(ets: &EnhancedTargetSequence) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "max_block_distance = {}", ets.max_block_distance);
    for t in &ets.targets {
        let _ = write!(
            out,
            "\n[[target]]\nid = {}\nfile = {}\nline = {}\ntimeout_s = {}\n",
            string(&t.id),
            string(&t.file),
            t.line,
            float(t.timeout_s)
        );
    }
    for b in &ets.blocks {
        let _ = write!(
            out,
            "\n[[block]]\nblock_id = {}\nfile = {}\nfunction = {}\noccurrence = {}\ncfg_block = {}\nstart_line = {}\nend_line = {}\nweight = {}\n",
            b.block_id,
            string(&b.file),
            string(&b.function),
            b.occurrence,
            b.cfg_block,
            b.start_line,
            b.end_line,
            format_weight(b.weight)
        );
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRec {
    max_block_distance: u64,
    #[serde(default)]
    target: Vec<TargetRec>,
    #[serde(default)]
    block: Vec<Spanned<BlockRec>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn value(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetRec {
    id: String,
    file: String,
    line: u32,
    timeout_s: Number,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRec {
    block_id: Spanned<u32>,
    file: String,
    function: String,
    occurrence: usize,
    cfg_block: usize,
    start_line: u32,
    end_line: u32,
    weight: Number,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

pub fn from_toml_str(text: &str) -> Result<EnhancedTargetSequence, SchemaError> {
    let rec: FileRec = toml::from_str(text).map_err(|e| SchemaError {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut targets = Vec::with_capacity(rec.target.len());
    for t in rec.target {
        let timeout_s = t.timeout_s.value();
        if t.line == 0 || !(timeout_s > 0.0) {
            return Err(SchemaError { line: 0, message: format!("target `{}` needs line >= 1 and timeout_s > 0", t.id) });
        }
        targets.push(TargetPoint { id: t.id, file: t.file, line: t.line, timeout_s });
    }
    let mut seen: HashMap<u32, usize> = HashMap::new();
    let mut blocks = Vec::with_capacity(rec.block.len());
    for spanned in rec.block {
        let line = line_of(text, spanned.span().start);
        let b = spanned.into_inner();
        let id_line = line_of(text, b.block_id.span().start);
        let block_id = b.block_id.into_inner();
        if block_id == 0 {
            return Err(SchemaError { line: id_line, message: "block_id must be positive".into() });
        }
        if let Some(first) = seen.insert(block_id, id_line) {
            return Err(SchemaError {
                line: id_line,
                message: format!("duplicate block_id {block_id} (first used on line {first})"),
            });
        }
        let weight = b.weight.value();
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(SchemaError { line, message: format!("weight {weight} outside (0, 1]") });
        }
        if b.start_line > b.end_line {
            return Err(SchemaError { line, message: "start_line after end_line".into() });
        }
        blocks.push(EtsBlock {
            block_id,
            file: b.file,
            function: b.function,
            occurrence: b.occurrence,
            cfg_block: b.cfg_block,
            start_line: b.start_line,
            end_line: b.end_line,
            weight,
        });
    }
    Ok(EnhancedTargetSequence { targets, blocks, max_block_distance: rec.max_block_distance })
}

pub fn write_ets_toml(ets: &EnhancedTargetSequence, path: &Path) -> Result<(), PreprocessError> {
    std::fs::write(path, to_toml_string(ets))
        .map_err(|source| PreprocessError::Io { path: path.display().to_string(), source })
}

pub fn read_ets_toml(path: &Path) -> Result<EnhancedTargetSequence, PreprocessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PreprocessError::Io { path: path.display().to_string(), source })?;
    Ok(from_toml_str(&text)?)
}
