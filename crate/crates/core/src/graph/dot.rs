//! The restricted record-DOT dialect:
//!
//! ```text
//! digraph "Call graph" {
//! Node0x…[shape=record,filename="…",startline=N,headline=N,bbendline=N,startcolumn=N,label="{…}"];
//! Node0x… -> Node0x…;
//! Node0x… -> Node0x…[indirect];
//! }
//! ```
//!
//! The `digraph` wrapper is optional. A raw line break inside a quoted string
//! is read as `/`.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{GraphEdge, GraphKind, GraphNode, ProgramGraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct DotSyntaxError {
    pub line: usize,
    pub message: String,
}

const CG_TITLE: &str = "Call graph";

fn cfg_title(symbol: &str) -> String {
    format!("CFG for '{symbol}' function")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Render a graph. Each node line is followed by its outgoing edges; edges
/// leaving nodes outside the graph come last.
pub fn emit_dot(g: &ProgramGraph) -> String {
    let mut out = String::new();
    let title = match &g.kind {
        GraphKind::CallGraph => CG_TITLE.to_string(),
        GraphKind::ControlFlowGraph(sym) => cfg_title(sym),
    };
    let _ = writeln!(out, "digraph {} {{", quote(&title));
    let edge_line = |out: &mut String, e: &GraphEdge| {
        let _ = writeln!(out, "{} -> {}{};", e.from, e.to, if e.indirect { "[indirect]" } else { "" });
    };
    let known: HashSet<&str> = g.nodes.iter().map(|n| n.node_id.as_str()).collect();
    for n in &g.nodes {
        let _ = writeln!(
            out,
            "{}[shape=record,filename={},startline={},headline={},bbendline={},startcolumn={},label={}];",
            n.node_id,
            quote(&n.filename),
            n.startline,
            n.headline,
            n.bbendline,
            n.startcolumn,
            quote(&format!("{{{}}}", n.label)),
        );
        for e in g.edges.iter().filter(|e| e.from == n.node_id) {
            edge_line(&mut out, e);
        }
    }
    for e in g.edges.iter().filter(|e| !known.contains(e.from.as_str())) {
        edge_line(&mut out, e);
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
    Arrow,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, DotSyntaxError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(DotSyntaxError { line: start, message: "unterminated string".into() }),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('\n') => line += 1,
                            Some(e) => s.push(e),
                            None => {
                                return Err(DotSyntaxError { line: start, message: "unterminated string".into() })
                            }
                        },
                        Some('\r') => {}
                        Some('\n') => {
                            line += 1;
                            if !s.ends_with('/') {
                                s.push('/');
                            }
                        }
                        Some(ch) => s.push(ch),
                    }
                }
                out.push((Tok::Str(s), start));
            }
            '-' => {
                chars.next();
                if chars.next_if_eq(&'>').is_none() {
                    return Err(DotSyntaxError { line, message: "expected `->`".into() });
                }
                out.push((Tok::Arrow, line));
            }
            '[' | ']' | '=' | ',' | ';' | '{' | '}' => {
                chars.next();
                out.push((Tok::Punct(c), line));
            }
            c if c.is_ascii_alphanumeric() || c == '_' || c == '.' => {
                let mut w = String::new();
                while let Some(ch) = chars.next_if(|ch| ch.is_ascii_alphanumeric() || *ch == '_' || *ch == '.') {
                    w.push(ch);
                }
                out.push((Tok::Word(w), line));
            }
            other => return Err(DotSyntaxError { line, message: format!("unexpected character `{other}`") }),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks.get(self.at).or(self.toks.last()).map_or(1, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, DotSyntaxError> {
        Err(DotSyntaxError { line: self.line(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.0.clone());
        self.at += 1;
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), DotSyntaxError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn word(&mut self, what: &str) -> Result<String, DotSyntaxError> {
        match self.bump() {
            Some(Tok::Word(w)) => Ok(w),
            _ => {
                self.at -= 1;
                self.err(format!("expected {what}"))
            }
        }
    }
}

#[derive(Default)]
struct Attrs {
    shape: Option<String>,
    filename: Option<String>,
    startline: Option<u32>,
    headline: Option<u32>,
    bbendline: Option<u32>,
    startcolumn: Option<u32>,
    label: Option<String>,
}

/// Parse one graph in the dialect above.
pub fn parse_dot(text: &str) -> Result<ProgramGraph, DotSyntaxError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let mut kind = GraphKind::CallGraph;
    let mut wrapped = false;
    if p.peek() == Some(&Tok::Word("digraph".into())) {
        p.at += 1;
        let title = match p.bump() {
            Some(Tok::Str(s)) | Some(Tok::Word(s)) => s,
            _ => return p.err("expected graph name"),
        };
        kind = if title == CG_TITLE {
            GraphKind::CallGraph
        } else if let Some(sym) = title.strip_prefix("CFG for '").and_then(|s| s.strip_suffix("' function")) {
            GraphKind::ControlFlowGraph(sym.to_string())
        } else {
            return p.err(format!("unknown graph name {title:?}"));
        };
        p.expect('{')?;
        wrapped = true;
    }

    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut ids = HashSet::new();
    let mut edges = Vec::new();
    loop {
        match p.peek() {
            None if wrapped => return p.err("expected `}`"),
            None => break,
            Some(Tok::Punct('}')) if wrapped => {
                p.at += 1;
                if p.peek().is_some() {
                    return p.err("trailing input after graph");
                }
                break;
            }
            Some(Tok::Punct(';')) => {
                p.at += 1;
                continue;
            }
            _ => {}
        }
        let line = p.line();
        let from = p.word("node id")?;
        if p.peek() == Some(&Tok::Arrow) {
            p.at += 1;
            let to = p.word("node id")?;
            let mut indirect = false;
            if p.eat('[') {
                let attr = p.word("edge attribute")?;
                if attr != "indirect" {
                    return Err(DotSyntaxError { line, message: format!("unknown edge attribute `{attr}`") });
                }
                indirect = true;
                p.expect(']')?;
            }
            p.eat(';');
            edges.push(GraphEdge { from, to, indirect });
            continue;
        }
        p.expect('[')?;
        let mut a = Attrs::default();
        loop {
            let key = p.word("attribute name")?;
            p.expect('=')?;
            let value = match p.bump() {
                Some(Tok::Str(s)) | Some(Tok::Word(s)) => s,
                _ => return p.err(format!("expected value for `{key}`")),
            };
            let num = |v: &str| {
                v.parse::<u32>().map_err(|_| DotSyntaxError { line, message: format!("`{key}` must be a number") })
            };
            let slot_taken = match key.as_str() {
                "shape" => a.shape.replace(value).is_some(),
                "filename" => a.filename.replace(value).is_some(),
                "startline" => a.startline.replace(num(&value)?).is_some(),
                "headline" => a.headline.replace(num(&value)?).is_some(),
                "bbendline" => a.bbendline.replace(num(&value)?).is_some(),
                "startcolumn" => a.startcolumn.replace(num(&value)?).is_some(),
                "label" => a.label.replace(value).is_some(),
                other => return Err(DotSyntaxError { line, message: format!("unknown attribute `{other}`") }),
            };
            if slot_taken {
                return Err(DotSyntaxError { line, message: format!("attribute `{key}` given twice") });
            }
            if !p.eat(',') {
                break;
            }
        }
        p.expect(']')?;
        p.eat(';');
        if a.shape.as_deref() != Some("record") {
            return Err(DotSyntaxError { line, message: "node shape must be `record`".into() });
        }
        let missing = |name: &str| DotSyntaxError { line, message: format!("missing attribute `{name}`") };
        let label = a.label.ok_or_else(|| missing("label"))?;
        let label = match label.strip_prefix('{').and_then(|l| l.strip_suffix('}')) {
            Some(inner) => inner.to_string(),
            None => label,
        };
        if !ids.insert(from.clone()) {
            return Err(DotSyntaxError { line, message: format!("node `{from}` declared twice") });
        }
        nodes.push(GraphNode {
            node_id: from,
            filename: a.filename.ok_or_else(|| missing("filename"))?,
            startline: a.startline.ok_or_else(|| missing("startline"))?,
            headline: a.headline.ok_or_else(|| missing("headline"))?,
            bbendline: a.bbendline.ok_or_else(|| missing("bbendline"))?,
            startcolumn: a.startcolumn.ok_or_else(|| missing("startcolumn"))?,
            label,
        });
    }
    let entry = match kind {
        GraphKind::CallGraph => None,
        GraphKind::ControlFlowGraph(_) => nodes.first().map(|n| n.node_id.clone()),
    };
    Ok(ProgramGraph { kind, nodes, edges, entry })
}
