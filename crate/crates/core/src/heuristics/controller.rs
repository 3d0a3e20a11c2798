//! Adaptive table deepening between search iterations.

use crate::error::Result;
use crate::lattice::{Direction, Problem};
use crate::scalar::Cost;

use super::eval::{TableHeuristic, TableSet};
use super::table::BuildLimit;
use super::{Heuristic, HeuristicKind};

/// Miss ratio above which the primary tables are rebuilt with more slack.
pub const MISS_THRESHOLD: f64 = 0.25;

/// Outcome of [`deepen_decision`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deepen<S> {
    Keep,
    /// Rebuild the primary family with this slack.
    Primary(S),
    /// Rebuild the pair tables with this slack so pruning stays safe.
    Pair(S),
}

fn double<S: Cost>(d: S) -> S {
    let two = S::one() + S::one();
    (d * two).max(two)
}

/// Decide whether to rebuild tables before the next iteration.
///
/// Soundness comes first: if `next_thresh` would exceed `l_total +
/// delta_pair`, the pair slack is doubled until it covers. Otherwise the
/// primary family is deepened when the miss ratio exceeds
/// [`MISS_THRESHOLD`].
pub fn deepen_decision<S: Cost>(
    hits: u64,
    misses: u64,
    delta_primary: S,
    delta_pair: S,
    l_total: S,
    next_thresh: Option<S>,
) -> Deepen<S> {
    if let Some(t) = next_thresh {
        if t > l_total + delta_pair {
            let mut d = double(delta_pair);
            while t > l_total + d {
                d = double(d);
            }
            return Deepen::Pair(d);
        }
    }
    let total = hits + misses;
    if total > 0 && misses as f64 / total as f64 > MISS_THRESHOLD {
        return Deepen::Primary(double(delta_primary));
    }
    Deepen::Keep
}

/// A [`TableHeuristic`] that rebuilds its own tables when the miss ratio
/// gets high or when the search threshold outgrows the pair slack.
pub struct HeuristicController<S> {
    problem: Problem<S>,
    eval: TableHeuristic<S>,
    delta_pair: S,
    delta_m: S,
    limit: BuildLimit,
    /// Set to false to keep the tables fixed (soundness rebuilds still run).
    pub adaptive: bool,
    /// Number of rebuilds so far.
    pub rebuilds: usize,
}

impl<S: Cost> HeuristicController<S> {
    pub fn new(
        problem: &Problem<S>,
        kind: HeuristicKind,
        delta_pair: S,
        delta_m: S,
        limit: BuildLimit,
    ) -> Result<Self> {
        let kind = kind.resolve(problem.k());
        let tables = TableSet::build(problem, kind, delta_pair, delta_m, limit)?;
        Self::from_tables(problem, kind, tables, delta_pair, delta_m, limit)
    }

    pub fn from_tables(
        problem: &Problem<S>,
        kind: HeuristicKind,
        tables: TableSet<S>,
        delta_pair: S,
        delta_m: S,
        limit: BuildLimit,
    ) -> Result<Self> {
        Ok(Self {
            problem: problem.clone(),
            eval: TableHeuristic::new(problem, kind, tables)?,
            delta_pair,
            delta_m,
            limit,
            adaptive: true,
            rebuilds: 0,
        })
    }

    pub fn evaluator(&self) -> &TableHeuristic<S> {
        &self.eval
    }

    pub fn evaluator_mut(&mut self) -> &mut TableHeuristic<S> {
        &mut self.eval
    }

    pub fn delta_pair(&self) -> S {
        self.delta_pair
    }

    pub fn delta_m(&self) -> S {
        self.delta_m
    }

    fn apply(&mut self, decision: Deepen<S>) -> Result<bool> {
        let kind = self.eval.kind();
        match decision {
            Deepen::Keep => return Ok(false),
            Deepen::Pair(d) => {
                log::info!(
                    "rebuilding pair tables with slack {} (soundness)",
                    d.as_i64()
                );
                self.delta_pair = d;
                let pairs = TableSet::build_pairs(&self.problem, kind, d, self.limit)?;
                self.eval.tables_mut().pairs = pairs;
            }
            Deepen::Primary(d) if self.eval.subset_primary() => {
                log::info!(
                    "rebuilding subset tables with slack {} (miss rate)",
                    d.as_i64()
                );
                self.delta_m = d;
                let subsets = TableSet::build_subsets(
                    &self.problem,
                    kind,
                    d,
                    &self.eval.tables().pairs,
                    self.limit,
                )?;
                self.eval.tables_mut().subsets = subsets;
            }
            Deepen::Primary(d) => {
                log::info!(
                    "rebuilding pair tables with slack {} (miss rate)",
                    d.as_i64()
                );
                self.delta_pair = d;
                let pairs = TableSet::build_pairs(&self.problem, kind, d, self.limit)?;
                self.eval.tables_mut().pairs = pairs;
            }
        }
        self.rebuilds += 1;
        Ok(true)
    }
}

impl<S: Cost> Heuristic<S> for HeuristicController<S> {
    fn estimate(&mut self, head: &[i32], dir: Direction) -> Option<S> {
        self.eval.estimate(head, dir)
    }

    fn successor_estimates(&mut self, v: &[i32], dirs: &[Direction], out: &mut Vec<Option<S>>) {
        self.eval.successor_estimates(v, dirs, out)
    }

    fn hits_misses(&self) -> (u64, u64) {
        self.eval.hits_misses()
    }

    fn reset_counters(&mut self) {
        self.eval.reset_counters()
    }

    fn entries(&self) -> usize {
        self.eval.entries()
    }

    fn sound_limit(&self) -> Option<S> {
        self.eval.sound_limit()
    }

    fn ensure_sound(&mut self, thresh: S) -> Result<bool> {
        let l_total = self.eval.tables().l_total();
        match deepen_decision(0, 0, self.delta_m, self.delta_pair, l_total, Some(thresh)) {
            Deepen::Keep => Ok(false),
            d => self.apply(d),
        }
    }

    fn after_iteration(&mut self) -> Result<bool> {
        let (hits, misses) = self.eval.hits_misses();
        self.eval.reset_counters();
        if !self.adaptive {
            return Ok(false);
        }
        let primary = if self.eval.subset_primary() {
            self.delta_m
        } else {
            self.delta_pair
        };
        let l_total = self.eval.tables().l_total();
        match deepen_decision(hits, misses, primary, self.delta_pair, l_total, None) {
            Deepen::Keep => Ok(false),
            d => self.apply(d),
        }
    }
}
