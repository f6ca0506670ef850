use crate::preprocess::EnhancedTargetSequence;

pub const MAP_SIZE: usize = 1 << 16;
pub const ETS_TRACE_CAP: usize = 1 << 16;

/// Bucket class (1..=8) of a raw hit count; 0 for no hit.
pub fn bucket(count: u8) -> u8 {
    match count {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        4..=7 => 4,
        8..=15 => 5,
        16..=31 => 6,
        32..=127 => 7,
        _ => 8,
    }
}

/// Edge index of the transition `prev -> cur`.
pub fn edge_index(prev: u32, cur: u32) -> usize {
    (((prev >> 1) ^ cur) as usize) % MAP_SIZE
}

/// Edge hit counters for one execution. Counts saturate at 255.
#[derive(Clone)]
pub struct CoverageMap {
    cells: Box<[u8]>,
    touched: Vec<u16>,
    prev: u32,
}

impl Default for CoverageMap {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for CoverageMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoverageMap").field("nonzero", &self.touched.len()).finish()
    }
}

impl PartialEq for CoverageMap {
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells
    }
}

impl CoverageMap {
    pub fn new() -> Self {
        Self { cells: vec![0; MAP_SIZE].into_boxed_slice(), touched: Vec::new(), prev: 0 }
    }

    /// Zero the cells written since the last reset and restart edge tracking.
    pub fn reset(&mut self) {
        for &i in &self.touched {
            self.cells[i as usize] = 0;
        }
        self.touched.clear();
        self.prev = 0;
    }

    /// Record that guard `cur` fired.
    pub fn guard(&mut self, cur: u32) {
        let i = edge_index(self.prev, cur);
        let c = &mut self.cells[i];
        if *c == 0 {
            self.touched.push(i as u16);
        }
        *c = c.saturating_add(1);
        self.prev = cur;
    }

    pub fn count(&self, index: usize) -> u8 {
        self.cells[index]
    }

    pub fn bucket_at(&self, index: usize) -> u8 {
        bucket(self.cells[index])
    }

    /// Indices of nonzero cells in first-hit order.
    pub fn nonzero(&self) -> impl Iterator<Item = usize> + '_ {
        self.touched.iter().map(|&i| i as usize)
    }

    pub fn nonzero_count(&self) -> usize {
        self.touched.len()
    }
}

/// Highest bucket seen per cell over a campaign.
#[derive(Clone)]
pub struct CoverageHistory {
    max: Box<[u8]>,
    edges: usize,
}

impl Default for CoverageHistory {
    fn default() -> Self {
        Self { max: vec![0; MAP_SIZE].into_boxed_slice(), edges: 0 }
    }
}

impl std::fmt::Debug for CoverageHistory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoverageHistory").field("edges", &self.edges).finish()
    }
}

impl CoverageHistory {
    /// Would `map` raise some cell above its historical bucket?
    pub fn would_be_novel(&self, map: &CoverageMap) -> bool {
        map.nonzero().any(|i| map.bucket_at(i) > self.max[i])
    }

    /// Novelty check; on true the history absorbs `map`.
    pub fn is_novel(&mut self, map: &CoverageMap) -> bool {
        let novel = self.would_be_novel(map);
        if novel {
            for i in map.nonzero() {
                let b = map.bucket_at(i);
                if self.max[i] == 0 {
                    self.edges += 1;
                }
                self.max[i] = self.max[i].max(b);
            }
        }
        novel
    }

    /// Number of edges ever hit.
    pub fn edges(&self) -> usize {
        self.edges
    }
}

/// Free-function form of [`CoverageHistory::is_novel`].
pub fn coverage_is_novel(map: &CoverageMap, history: &mut CoverageHistory) -> bool {
    history.is_novel(map)
}

/// ETS block ids in the order one execution reported them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EtsTrace {
    pub hits: Vec<u32>,
    pub truncated: bool,
}

impl EtsTrace {
    pub fn push(&mut self, id: u32) {
        if self.hits.len() < ETS_TRACE_CAP {
            self.hits.push(id);
        } else {
            self.truncated = true;
        }
    }

    pub fn clear(&mut self) {
        self.hits.clear();
        self.truncated = false;
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    /// Distinct ids in ascending order.
    pub fn distinct(&self) -> Vec<u32> {
        let mut ids = self.hits.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Dense id -> weight table of an ETS.
#[derive(Debug, Clone, Default)]
pub struct EtsWeights {
    weights: Vec<f64>,
}

impl EtsWeights {
    pub fn new(ets: &EnhancedTargetSequence) -> Self {
        let n = ets.blocks.iter().map(|b| b.block_id as usize).max().unwrap_or(0);
        let mut weights = vec![f64::NAN; n + 1];
        for b in &ets.blocks {
            weights[b.block_id as usize] = b.weight;
        }
        Self { weights }
    }

    pub fn weight(&self, id: u32) -> Option<f64> {
        self.weights.get(id as usize).copied().filter(|w| !w.is_nan())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.len() <= 1
    }
}

/// Mean of `1/w - 1` over the distinct blocks of `trace`; `None` (infinite)
/// for an empty trace. Ids unknown to the ETS are ignored.
pub fn seed_distance(trace: &EtsTrace, weights: &EtsWeights) -> Option<f64> {
    let ds: Vec<f64> = trace.distinct().into_iter().filter_map(|id| weights.weight(id)).map(|w| 1.0 / w - 1.0).collect();
    if ds.is_empty() {
        None
    } else {
        Some(ds.iter().sum::<f64>() / ds.len() as f64)
    }
}

/// Highest weight and set of ETS blocks reached so far.
#[derive(Debug, Clone, Default)]
pub struct EtsHistory {
    pub best_weight: Option<f64>,
    seen: Vec<bool>,
}

impl EtsHistory {
    pub fn is_novel(&mut self, trace: &EtsTrace, weights: &EtsWeights) -> bool {
        if self.seen.len() < weights.len() {
            self.seen.resize(weights.len(), false);
        }
        let mut novel = false;
        let mut top: Option<f64> = None;
        for &id in &trace.hits {
            let Some(w) = weights.weight(id) else { continue };
            novel |= !self.seen[id as usize];
            top = Some(top.map_or(w, |t| t.max(w)));
        }
        if let Some(t) = top {
            novel |= self.best_weight.is_none_or(|b| t > b);
        }
        if novel {
            for &id in &trace.hits {
                if weights.weight(id).is_some() {
                    self.seen[id as usize] = true;
                }
            }
            self.best_weight = match (self.best_weight, top) {
                (Some(b), Some(t)) => Some(b.max(t)),
                (b, t) => b.or(t),
            };
        }
        novel
    }

    pub fn seen_blocks(&self) -> usize {
        self.seen.iter().filter(|s| **s).count()
    }
}

/// Free-function form of [`EtsHistory::is_novel`].
pub fn ets_is_novel(trace: &EtsTrace, weights: &EtsWeights, history: &mut EtsHistory) -> bool {
    history.is_novel(trace, weights)
}

/// Largest weight in `trace`.
pub fn best_weight(trace: &EtsTrace, weights: &EtsWeights) -> Option<f64> {
    trace.hits.iter().filter_map(|&id| weights.weight(id)).fold(None, |acc, w| Some(acc.map_or(w, |a: f64| a.max(w))))
}
