//! One-call alignment: bounds, tables and the chosen search.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heuristics::eval::{TableHeuristic, TableSet};
use crate::heuristics::{
    Bounds, BuildLimit, Heuristic, HeuristicController, HeuristicKind, ZeroHeuristic,
};
use crate::lattice::Problem;
use crate::scalar::Cost;
use crate::search::{self, IddpOptions, MemoryBudget, SearchOptions, Solution, ENTRY_FOOTPRINT};
use crate::seqio::SCALE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dijkstra,
    AStar,
    Pea,
    Iddp,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dijkstra" => Ok(Self::Dijkstra),
            "astar" | "a*" => Ok(Self::AStar),
            "pea" | "peastar" | "pea*" => Ok(Self::Pea),
            "iddp" => Ok(Self::Iddp),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dijkstra => "dijkstra",
            Self::AStar => "astar",
            Self::Pea => "pea",
            Self::Iddp => "iddp",
        })
    }
}

/// Where the search's upper bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperBound {
    /// Star-alignment cost.
    Star,
    /// A caller-supplied bound in user units.
    Given(i64),
}

impl FromStr for UpperBound {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("star") {
            return Ok(Self::Star);
        }
        s.parse::<i64>()
            .map(Self::Given)
            .map_err(|_| format!("upper bound must be 'star' or an integer, got '{s}'"))
    }
}

/// Search configuration. Costs are in user units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignConfig {
    pub algorithm: Algorithm,
    /// `None` picks all3 for k ≥ 4 and pair otherwise.
    pub heuristic: Option<HeuristicKind>,
    pub pea_c: i64,
    pub delta_pair: i64,
    /// Initial slack for tables of size ≥ 3.
    pub delta_m: i64,
    /// Budget in footprint units covering search records and tables.
    pub memory_cap: Option<u64>,
    pub upper: UpperBound,
    /// Let IDDP rebuild tables when the miss ratio is high.
    pub adaptive: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Iddp,
            heuristic: None,
            pea_c: 0,
            delta_pair: 300,
            delta_m: 20,
            memory_cap: None,
            upper: UpperBound::Star,
            adaptive: true,
        }
    }
}

impl AlignConfig {
    pub fn heuristic_for(&self, k: usize) -> HeuristicKind {
        self.heuristic
            .unwrap_or(if k >= 4 {
                HeuristicKind::All(3)
            } else {
                HeuristicKind::Pair
            })
            .resolve(k)
    }
}

/// A solution plus the bounds it was searched under.
#[derive(Debug, Clone)]
pub struct Report<S> {
    pub solution: Solution<S>,
    /// Upper bound used (scaled).
    pub upper: S,
    /// Star bound details when computed.
    pub bounds: Option<Bounds<S>>,
    pub heuristic: HeuristicKind,
}

/// Align `problem` as configured.
pub fn align<S: Cost>(problem: &Problem<S>, cfg: &AlignConfig) -> Result<Report<S>> {
    let k = problem.k();
    let kind = cfg.heuristic_for(k);
    let scaled = |v: i64| -> Result<S> {
        v.checked_mul(SCALE)
            .and_then(S::from_i64)
            .filter(|x| *x >= S::zero())
            .ok_or_else(|| Error::InvalidProblem(format!("value {v} out of range")))
    };
    let limit = BuildLimit(cfg.memory_cap.map(|c| (c / ENTRY_FOOTPRINT) as usize));
    let budget = MemoryBudget {
        cap: cfg.memory_cap,
    };

    let mut delta_pair = scaled(cfg.delta_pair)?;
    let delta_m = scaled(cfg.delta_m)?;

    // Pair tables double as the source of the star bound.
    let pair_kind = if kind == HeuristicKind::Zero {
        HeuristicKind::Pair
    } else {
        kind
    };
    let mut pairs = TableSet::build_pairs(problem, pair_kind, delta_pair, limit)?;
    let (upper, bounds) = match cfg.upper {
        UpperBound::Star => {
            let b = Bounds::from_pair_tables(problem, &pairs)?;
            (b.upper, Some(b))
        }
        UpperBound::Given(u) => (scaled(u)?, None),
    };

    // Single-pass searches prune against the upper bound, so their pair
    // tables must reach at least that far above the pairwise optima.
    if matches!(cfg.algorithm, Algorithm::AStar | Algorithm::Pea) && kind != HeuristicKind::Zero {
        let l_total = pairs.iter().fold(S::zero(), |a, t| a + t.l_subset());
        let needed = upper - l_total;
        if needed > delta_pair {
            delta_pair = needed;
            pairs = TableSet::build_pairs(problem, pair_kind, delta_pair, limit)?;
        }
    }

    let opts = SearchOptions {
        upper: Some(upper),
        memory: budget,
    };
    let solution = match (cfg.algorithm, kind) {
        (Algorithm::Dijkstra, _) => search::dijkstra(
            problem,
            &SearchOptions {
                upper: None,
                memory: budget,
            },
        )?,
        (Algorithm::AStar, HeuristicKind::Zero) => {
            search::astar(problem, &mut ZeroHeuristic, &opts)?
        }
        (Algorithm::Pea, HeuristicKind::Zero) => {
            search::pea_star(problem, &mut ZeroHeuristic, scaled(cfg.pea_c)?, &opts)?
        }
        (Algorithm::Iddp, HeuristicKind::Zero) => {
            let o = IddpOptions {
                lower: None,
                upper,
                memory: budget,
            };
            search::iddp(problem, &mut ZeroHeuristic, &o)?
        }
        (Algorithm::AStar | Algorithm::Pea, _) => {
            let subsets = TableSet::build_subsets(problem, kind, delta_m, &pairs, limit)?;
            let mut h = TableHeuristic::new(problem, kind, TableSet { pairs, subsets })?;
            if cfg.algorithm == Algorithm::AStar {
                search::astar(problem, &mut h, &opts)?
            } else {
                search::pea_star(problem, &mut h, scaled(cfg.pea_c)?, &opts)?
            }
        }
        (Algorithm::Iddp, _) => {
            let subsets = TableSet::build_subsets(problem, kind, delta_m, &pairs, limit)?;
            let tables = TableSet { pairs, subsets };
            let mut h = HeuristicController::from_tables(
                problem, kind, tables, delta_pair, delta_m, limit,
            )?;
            h.adaptive = cfg.adaptive;
            let o = IddpOptions {
                lower: None,
                upper,
                memory: budget,
            };
            let mut sol = search::iddp(problem, &mut h, &o)?;
            sol.stats.heu_entries = h.entries();
            sol
        }
    };
    Ok(Report {
        solution,
        upper,
        bounds,
        heuristic: kind,
    })
}
