//! Goal-distance estimates from optimal sub-alignments.

pub mod bounds;
pub mod controller;
pub mod eval;
pub mod table;

use std::fmt;
use std::str::FromStr;

use crate::error::Result;
use crate::lattice::Direction;
use crate::scalar::Cost;

pub use bounds::{carrillo_lipman_delta, pairwise_optimum, star_upper_bound, Bounds};
pub use controller::{deepen_decision, Deepen, HeuristicController};
pub use eval::{AccessCounters, TableHeuristic, TableSet};
pub use table::{build_table, BuildLimit, HeuristicTable};

/// Which estimate to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Zero,
    /// Sum of pairwise goal distances.
    Pair,
    /// Sum over all `m`-subsets divided by C(k-2, m-2).
    All(usize),
    /// Blocks `0..m` and `m..k` plus the pairs across them.
    One(usize),
}

impl FromStr for HeuristicKind {
    type Err = String;

    /// Accepts `zero`, `pair`, `allM` (e.g. `all3`), `one` and `oneM`.
    /// Plain `one` is returned as `One(0)`, meaning "half of k".
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "zero" => return Ok(Self::Zero),
            "pair" => return Ok(Self::Pair),
            "one" => return Ok(Self::One(0)),
            _ => {}
        }
        let num = |rest: &str| {
            rest.parse::<usize>()
                .map_err(|_| format!("unknown heuristic '{s}'"))
        };
        if let Some(rest) = s.strip_prefix("all") {
            Ok(Self::All(num(rest)?))
        } else if let Some(rest) = s.strip_prefix("one") {
            Ok(Self::One(num(rest)?))
        } else {
            Err(format!("unknown heuristic '{s}'"))
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Pair => write!(f, "pair"),
            Self::All(m) => write!(f, "all{m}"),
            Self::One(m) => write!(f, "one{m}"),
        }
    }
}

impl HeuristicKind {
    /// Fill in the default block size for `one` (⌊k/2⌋).
    pub fn resolve(self, k: usize) -> Self {
        match self {
            Self::One(0) => Self::One(k / 2),
            other => other,
        }
    }
}

/// A goal-distance estimate as the searches consume it.
///
/// `None` means the tables hold no value for some pair, so the edge lies
/// outside every pairwise band and may be pruned while the threshold stays
/// within [`Heuristic::sound_limit`].
pub trait Heuristic<S: Cost> {
    /// Estimate for the edge with head `head` entered along `dir`.
    fn estimate(&mut self, head: &[i32], dir: Direction) -> Option<S>;

    /// Estimates for the successors of vertex `v` along `dirs`.
    fn successor_estimates(&mut self, v: &[i32], dirs: &[Direction], out: &mut Vec<Option<S>>) {
        out.clear();
        let mut child = v.to_vec();
        let k = v.len();
        for &d in dirs {
            for (i, c) in child.iter_mut().enumerate() {
                *c = v[i] + d.get(i, k);
            }
            let h = self.estimate(&child, d);
            out.push(h);
        }
    }

    fn hits_misses(&self) -> (u64, u64) {
        (0, 0)
    }

    fn reset_counters(&mut self) {}

    /// Stored table values, for memory accounting.
    fn entries(&self) -> usize {
        0
    }

    /// Largest threshold at which pruning on `None` is safe; `None` if
    /// unbounded.
    fn sound_limit(&self) -> Option<S> {
        None
    }

    /// Make pruning safe up to `thresh`. Returns whether tables changed.
    fn ensure_sound(&mut self, _thresh: S) -> Result<bool> {
        Ok(false)
    }

    /// Hook between search iterations. Returns whether tables changed.
    fn after_iteration(&mut self) -> Result<bool> {
        Ok(false)
    }
}

/// h ≡ 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroHeuristic;

impl<S: Cost> Heuristic<S> for ZeroHeuristic {
    fn estimate(&mut self, _head: &[i32], _dir: Direction) -> Option<S> {
        Some(S::zero())
    }

    fn successor_estimates(&mut self, _v: &[i32], dirs: &[Direction], out: &mut Vec<Option<S>>) {
        out.clear();
        out.resize(dirs.len(), Some(S::zero()));
    }
}

impl<S: Cost, H: Heuristic<S> + ?Sized> Heuristic<S> for &mut H {
    fn estimate(&mut self, head: &[i32], dir: Direction) -> Option<S> {
        (**self).estimate(head, dir)
    }
    fn successor_estimates(&mut self, v: &[i32], dirs: &[Direction], out: &mut Vec<Option<S>>) {
        (**self).successor_estimates(v, dirs, out)
    }
    fn hits_misses(&self) -> (u64, u64) {
        (**self).hits_misses()
    }
    fn reset_counters(&mut self) {
        (**self).reset_counters()
    }
    fn entries(&self) -> usize {
        (**self).entries()
    }
    fn sound_limit(&self) -> Option<S> {
        (**self).sound_limit()
    }
    fn ensure_sound(&mut self, thresh: S) -> Result<bool> {
        (**self).ensure_sound(thresh)
    }
    fn after_iteration(&mut self) -> Result<bool> {
        (**self).after_iteration()
    }
}
