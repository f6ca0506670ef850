use super::cfg::decompose;
use super::{id_base, node_id, GraphEdge, GraphKind, GraphNode, ProgramGraph};
use crate::minilang::ast::{expr_calls, Ast, Block, Call, PrintArg, StmtKind};

/// One node per function occurrence in declaration order, one edge per
/// distinct (caller, callee) pair found anywhere in the caller's body.
pub fn build_call_graph(ast: &Ast) -> ProgramGraph {
    let base = id_base("callgraph");
    let mut nodes = Vec::new();
    let mut symbols = Vec::new();
    let mut callees = Vec::new();
    for f in &ast.functions {
        let mut calls = Vec::new();
        block_calls(&f.body, &mut calls);
        let mut distinct: Vec<String> = Vec::new();
        for c in calls {
            let sym = c.symbol();
            if !distinct.contains(&sym) {
                distinct.push(sym);
            }
        }
        for occ in 0..f.occurrences() {
            let cfg = decompose(f, occ);
            let entry = &cfg.blocks[0];
            nodes.push(GraphNode {
                node_id: node_id(base, nodes.len()),
                filename: f.file.clone(),
                startline: f.pos.line,
                headline: f.head_line(),
                bbendline: entry.end_line,
                startcolumn: f.pos.column,
                label: f.symbol(occ),
            });
            symbols.push(f.symbol(occ));
            callees.push(distinct.clone());
        }
    }
    let mut edges = Vec::new();
    for (i, list) in callees.iter().enumerate() {
        for callee in list {
            if let Some(j) = symbols.iter().position(|s| s == callee) {
                edges.push(GraphEdge { from: nodes[i].node_id.clone(), to: nodes[j].node_id.clone(), indirect: false });
            }
        }
    }
    ProgramGraph { kind: GraphKind::CallGraph, nodes, edges, entry: None }
}

fn block_calls<'a>(b: &'a Block, out: &mut Vec<&'a Call>) {
    for s in &b.stmts {
        match &s.kind {
            StmtKind::Assign { value, .. } => expr_calls(value, out),
            StmtKind::Call(c) => {
                c.args.iter().for_each(|a| expr_calls(a, out));
                out.push(c);
            }
            StmtKind::If { cond, then_block, else_block } => {
                expr_calls(cond, out);
                block_calls(then_block, out);
                if let Some(e) = else_block {
                    block_calls(e, out);
                }
            }
            StmtKind::While { cond, body } => {
                expr_calls(cond, out);
                block_calls(body, out);
            }
            StmtKind::Return(Some(e)) | StmtKind::Print(PrintArg::Expr(e)) => expr_calls(e, out),
            _ => {}
        }
    }
}
