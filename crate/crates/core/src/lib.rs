//! Exact multiple sequence alignment under sum-of-pairs cost with affine gaps.
//!
//! The searches run over lattice edges rather than vertices so that gap
//! openings can be charged from two consecutive steps. All costs are
//! integers in doubled units; see [`seqio::SCALE`].

// Coordinate loops index several per-sequence arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod heuristics;
pub mod lattice;
pub mod oracle;
pub mod scalar;
pub mod search;
pub mod seqio;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Cost;
pub use search::sparse;
pub use solver::{align, Algorithm, AlignConfig, Report, UpperBound};

/// Default cost scalar.
pub type Score = i64;
pub type CostModel = seqio::CostModel<Score>;
pub type Problem = lattice::Problem<Score>;
pub type HeuristicTable = heuristics::HeuristicTable<Score>;
pub type Solution = search::Solution<Score>;
pub type Bounds = heuristics::Bounds<Score>;
