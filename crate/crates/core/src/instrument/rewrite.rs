use std::collections::BTreeMap;

use crate::graph::{Anchor, Branch, ListPath};
use crate::minilang::ast::{Ast, Block, Pos, ProbeKind, Stmt, StmtKind};

/// One probe to place at `at` (a slot of the original, unrewritten AST).
#[derive(Debug, Clone)]
pub(crate) struct Insertion {
    pub at: Anchor,
    pub kind: ProbeKind,
    pub occurrence: usize,
    pub id: u32,
}

/// Rebuild `ast` with the insertions of each declaration (keyed by its index)
/// in place. Probes of the same kind at the same slot from different
/// occurrences share one statement.
pub(crate) fn apply(ast: &Ast, inserts: &BTreeMap<usize, Vec<Insertion>>) -> Ast {
    let mut out = ast.clone();
    for (&di, list) in inserts {
        let f = &mut out.functions[di];
        let occurrences = f.occurrences();
        let mut by_list: BTreeMap<ListPath, BTreeMap<usize, Vec<(ProbeKind, Vec<u32>)>>> = BTreeMap::new();
        for ins in list {
            let slot = by_list.entry(ins.at.list.clone()).or_default().entry(ins.at.index).or_default();
            match slot.iter_mut().find(|(k, ids)| *k == ins.kind && ids[ins.occurrence] == 0) {
                Some((_, ids)) => ids[ins.occurrence] = ins.id,
                None => {
                    let mut ids = vec![0; occurrences];
                    ids[ins.occurrence] = ins.id;
                    slot.push((ins.kind, ids));
                }
            }
        }
        rewrite(&mut f.body, &ListPath::default(), &by_list);
    }
    out
}

type Slots = BTreeMap<ListPath, BTreeMap<usize, Vec<(ProbeKind, Vec<u32>)>>>;

fn rewrite(block: &mut Block, path: &ListPath, slots: &Slots) {
    for (i, s) in block.stmts.iter_mut().enumerate() {
        match &mut s.kind {
            StmtKind::If { then_block, else_block, .. } => {
                rewrite(then_block, &path.child(i, Branch::Then), slots);
                if let Some(e) = else_block {
                    rewrite(e, &path.child(i, Branch::Else), slots);
                }
            }
            StmtKind::While { body, .. } => rewrite(body, &path.child(i, Branch::Body), slots),
            _ => {}
        }
    }
    let Some(here) = slots.get(path) else {
        return;
    };
    let old = std::mem::take(&mut block.stmts);
    let n = old.len();
    let mut stmts = Vec::with_capacity(n + here.len());
    let mut old = old.into_iter().peekable();
    for i in 0..=n {
        if let Some(probes) = here.get(&i) {
            let pos = old.peek().map_or(block.close, |s| s.pos);
            for (kind, ids) in probes {
                stmts.push(probe(*kind, ids.clone(), pos));
            }
        }
        if let Some(s) = old.next() {
            stmts.push(s);
        }
    }
    block.stmts = stmts;
}

fn probe(kind: ProbeKind, ids: Vec<u32>, pos: Pos) -> Stmt {
    Stmt { kind: StmtKind::Probe { kind, ids }, pos, end_line: pos.line }
}
