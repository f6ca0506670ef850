use std::path::Path;

/// A source location the fuzzer has to reach.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TargetPoint {
    pub id: String,
    pub file: String,
    pub line: u32,
    pub timeout_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}:{line}: {message}")]
pub struct TargetFileError {
    pub path: String,
    pub line: usize,
    pub message: String,
}

/// Parse a target list: one `id<TAB>path:line<TAB>timeout_s` per line. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_targets(text: &str, path: &str) -> Result<Vec<TargetPoint>, TargetFileError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |message: String| TargetFileError { path: path.to_string(), line: i + 1, message };
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, loc, timeout] = cols[..] else {
            return Err(err(format!("expected 3 tab-separated columns, found {}", cols.len())));
        };
        let (file, ln) = loc.rsplit_once(':').ok_or_else(|| err(format!("`{loc}` is not `path:line`")))?;
        let ln: u32 = ln.parse().map_err(|_| err(format!("bad line number `{ln}`")))?;
        if ln == 0 {
            return Err(err("line numbers start at 1".into()));
        }
        let timeout_s: f64 = timeout.trim().parse().map_err(|_| err(format!("bad timeout `{timeout}`")))?;
        if !(timeout_s > 0.0 && timeout_s.is_finite()) {
            return Err(err("timeout must be positive".into()));
        }
        if id.is_empty() || file.is_empty() {
            return Err(err("empty id or path".into()));
        }
        out.push(TargetPoint { id: id.to_string(), file: file.to_string(), line: ln, timeout_s });
    }
    Ok(out)
}

pub fn read_targets(path: &Path) -> Result<Vec<TargetPoint>, TargetFileError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| TargetFileError { path: name.clone(), line: 0, message: e.to_string() })?;
    parse_targets(&text, &name)
}

/// Render targets in the same tab-separated format.
pub fn format_targets(targets: &[TargetPoint]) -> String {
    targets.iter().map(|t| format!("{}\t{}:{}\t{}\n", t.id, t.file, t.line, t.timeout_s)).collect()
}
