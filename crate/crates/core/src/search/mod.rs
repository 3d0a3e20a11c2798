//! Dijkstra, A*, PEA* and IDDP over the edge lattice.

pub mod dijkstra;
pub mod iddp;
pub mod pea;
pub mod queue;
pub mod schedule;
pub mod sparse;

use std::time::Duration;

use crate::lattice::{Alignment, EdgeKey, KeyCodec};
use crate::scalar::Cost;

pub use dijkstra::{astar, dijkstra};
pub use iddp::{iddp, iddp_observed, IddpOptions, IddpView, Observer};
pub use pea::{partial_expansion_split, pea_star};
pub use queue::BucketQueue;
pub use schedule::ThresholdSchedule;

/// Footprint charged per live search record.
pub const RECORD_FOOTPRINT: u64 = 64;
/// Footprint charged per stored heuristic value.
pub const ENTRY_FOOTPRINT: u64 = 24;

/// Cap on `live records × RECORD_FOOTPRINT + table values × ENTRY_FOOTPRINT`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryBudget {
    pub cap: Option<u64>,
}

impl MemoryBudget {
    pub fn unlimited() -> Self {
        Self { cap: None }
    }

    pub fn capped(units: u64) -> Self {
        Self { cap: Some(units) }
    }

    pub fn used(records: usize, entries: usize) -> u64 {
        records as u64 * RECORD_FOOTPRINT + entries as u64 * ENTRY_FOOTPRINT
    }

    pub fn exceeded(&self, used: u64) -> bool {
        self.cap.is_some_and(|c| used > c)
    }
}

/// Counters reported by every search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub algorithm: String,
    /// Expansions summed over all iterations.
    pub expansions: u64,
    pub expansions_last_iter: u64,
    pub iterations: u32,
    pub max_open: usize,
    pub max_open_closed: usize,
    pub heu_hits: u64,
    pub heu_misses: u64,
    /// Heuristic table values at the end of the run.
    pub heu_entries: usize,
    pub peak_mem_units: u64,
    /// Largest sparsification exponent reached.
    pub max_sparse: u32,
    /// Auxiliary searches run during path reconstruction.
    pub relay_searches: u32,
    /// Most chain walks that stepped onto any one record.
    pub max_walks: u32,
    pub table_rebuilds: u32,
    pub time: Duration,
}

impl SearchStats {
    /// Total over last-iteration expansions (1 for single-pass searches).
    pub fn nu(&self) -> f64 {
        if self.expansions_last_iter == 0 {
            1.0
        } else {
            self.expansions as f64 / self.expansions_last_iter as f64
        }
    }

    pub fn miss_rate(&self) -> f64 {
        let total = self.heu_hits + self.heu_misses;
        if total == 0 {
            0.0
        } else {
            self.heu_misses as f64 / total as f64
        }
    }

    pub(crate) fn note_memory(&mut self, records: usize, open: usize, entries: usize) {
        self.max_open = self.max_open.max(open);
        self.max_open_closed = self.max_open_closed.max(records);
        self.peak_mem_units = self
            .peak_mem_units
            .max(MemoryBudget::used(records, entries));
    }
}

/// An optimal alignment with its cost (scaled units) and search counters.
#[derive(Debug, Clone)]
pub struct Solution<S> {
    pub cost: S,
    pub alignment: Alignment,
    pub stats: SearchStats,
}

impl<S: Cost> Solution<S> {
    /// Cost in user units.
    pub fn user_cost(&self) -> i64 {
        self.cost.as_i64() / crate::seqio::SCALE
    }
}

/// Options shared by the single-pass searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions<S> {
    /// Prune edges whose f exceeds this.
    pub upper: Option<S>,
    pub memory: MemoryBudget,
}

impl<S> Default for SearchOptions<S> {
    fn default() -> Self {
        Self {
            upper: None,
            memory: MemoryBudget::unlimited(),
        }
    }
}

pub(crate) fn path_to_alignment(
    codec: &KeyCodec,
    mut path: Vec<EdgeKey>,
    lens: &[i32],
) -> Alignment {
    path.reverse();
    Alignment::from_edges(codec, &path, lens)
}
