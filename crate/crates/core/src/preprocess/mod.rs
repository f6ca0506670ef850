//! Static analysis: target location, distances, context weights and the
//! enhanced target sequence (ETS).

mod distance;
mod ets_toml;
mod targets;

pub use distance::{
    block_distance, block_distances, call_graph_view, function_distance, locate_target_blocks, Analysis, BlockRef,
    Distance, CALL_COST,
};
pub use ets_toml::{format_weight, from_toml_str, read_ets_toml, to_toml_string, write_ets_toml, SchemaError};
pub use targets::{format_targets, parse_targets, read_targets, TargetFileError, TargetPoint};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::graph::{GraphSet, StoreError};

/// One ETS basic block.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EtsBlock {
    pub block_id: u32,
    pub file: String,
    pub function: String,
    pub occurrence: usize,
    pub cfg_block: usize,
    pub start_line: u32,
    pub end_line: u32,
    /// `1 / (1 + d)` for the block's distance `d`.
    pub weight: f64,
}

impl EtsBlock {
    pub fn contains(&self, file: &str, line: u32) -> bool {
        self.file == file && self.start_line <= line && line <= self.end_line
    }

    /// Distance recovered from the weight.
    pub fn distance(&self) -> f64 {
        1.0 / self.weight - 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct EnhancedTargetSequence {
    pub targets: Vec<TargetPoint>,
    pub blocks: Vec<EtsBlock>,
    pub max_block_distance: u64,
}

impl EnhancedTargetSequence {
    pub fn block(&self, id: u32) -> Option<&EtsBlock> {
        // Ids are assigned densely from 1 in block order.
        match self.blocks.get((id as usize).wrapping_sub(1)) {
            Some(b) if b.block_id == id => Some(b),
            _ => self.blocks.iter().find(|b| b.block_id == id),
        }
    }

    /// Targets whose line lies in `block`.
    pub fn targets_in<'a>(&'a self, block: &'a EtsBlock) -> impl Iterator<Item = &'a TargetPoint> + 'a {
        self.targets.iter().filter(move |t| block.contains(&t.file, t.line))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("target {id} ({file}:{line}) is not inside any basic block")]
    TargetNotFound { id: String, file: String, line: u32 },
    #[error(transparent)]
    Graphs(#[from] StoreError),
    #[error(transparent)]
    Targets(#[from] TargetFileError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Build the ETS for `targets`: every block at finite distance from some
/// target, numbered by (file, function, occurrence, block index).
pub fn compute_ets(graphs: &GraphSet, targets: &[TargetPoint]) -> Result<EnhancedTargetSequence, PreprocessError> {
    let analysis = Analysis::new(graphs);
    let dist = analysis.distances(targets)?;
    let mut found: Vec<(BlockRef, BigRational)> = dist.into_iter().collect();
    found.sort_by(|(a, _), (b, _)| {
        let ka = (&analysis.cfg(a).file, &a.function, a.occurrence, a.cfg_block);
        let kb = (&analysis.cfg(b).file, &b.function, b.occurrence, b.cfg_block);
        ka.cmp(&kb)
    });
    let mut max = BigRational::from_integer(0.into());
    let mut blocks = Vec::with_capacity(found.len());
    for (i, (r, d)) in found.into_iter().enumerate() {
        let cfg = analysis.cfg(&r);
        let node = &cfg.blocks[r.cfg_block];
        let weight = (BigRational::one() / (BigRational::one() + &d)).to_f64().unwrap_or(0.0);
        if d > max {
            max = d.clone();
        }
        blocks.push(EtsBlock {
            block_id: (i + 1) as u32,
            file: cfg.file.clone(),
            function: r.function.clone(),
            occurrence: r.occurrence,
            cfg_block: r.cfg_block,
            start_line: node.start_line,
            end_line: node.end_line,
            weight,
        });
    }
    let max_block_distance = max.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
    Ok(EnhancedTargetSequence { targets: targets.to_vec(), blocks, max_block_distance })
}

/// `difuzz preprocess`: graphs directory + target file to `ets.toml`.
pub fn preprocess(
    graphs_dir: &std::path::Path,
    targets_path: &std::path::Path,
    out: &std::path::Path,
) -> Result<EnhancedTargetSequence, PreprocessError> {
    let graphs = GraphSet::read_dir(graphs_dir)?;
    let targets = read_targets(targets_path)?;
    let ets = compute_ets(&graphs, &targets)?;
    write_ets_toml(&ets, out)?;
    Ok(ets)
}
