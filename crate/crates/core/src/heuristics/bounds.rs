//! Star-alignment upper bound and Carrillo-Lipman slack.

use crate::error::Result;
use crate::lattice::{Alignment, Direction, GapCharging, Problem};
use crate::scalar::{binomial, Cost};

use super::eval::pair_index;
use super::table::{build_table, optimal_alignment, BuildLimit, HeuristicTable};

/// Upper bound, pairwise optima and the slack between them.
#[derive(Debug, Clone)]
pub struct Bounds<S> {
    /// Cost of the star alignment; no optimal alignment costs more.
    pub upper: S,
    /// Σ of pairwise optima; no alignment costs less.
    pub l_total: S,
    /// Pairwise optima in [`pair_index`] order.
    pub per_pair: Vec<S>,
    /// `upper - l_total`, clamped at zero.
    pub delta: S,
    pub witness: Alignment,
}

impl<S: Cost> Bounds<S> {
    /// Bounds from pair tables in [`pair_index`] order (any slack works).
    pub fn from_pair_tables(problem: &Problem<S>, pairs: &[HeuristicTable<S>]) -> Result<Self> {
        let per_pair: Vec<S> = pairs.iter().map(|t| t.l_subset()).collect();
        let alignments = pairs
            .iter()
            .map(|t| optimal_alignment(problem, t))
            .collect::<Result<Vec<_>>>()?;
        let (upper, witness) = star_merge(problem, &per_pair, &alignments);
        let l_total = per_pair.iter().fold(S::zero(), |a, &b| a + b);
        let delta = carrillo_lipman_delta(upper, l_total, problem.k(), 2);
        Ok(Self {
            upper,
            l_total,
            per_pair,
            delta,
            witness,
        })
    }

    pub fn compute(problem: &Problem<S>) -> Result<Self> {
        let k = problem.k();
        let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in (i + 1)..k {
                pairs.push(build_table(
                    problem,
                    &[i, j],
                    S::zero(),
                    None,
                    BuildLimit(None),
                )?);
            }
        }
        Self::from_pair_tables(problem, &pairs)
    }
}

/// Optimal cost and alignment of sequences `i` and `j` alone.
pub fn pairwise_optimum<S: Cost>(
    problem: &Problem<S>,
    i: usize,
    j: usize,
) -> Result<(S, Alignment)> {
    let (a, b) = (i.min(j), i.max(j));
    let t = build_table(problem, &[a, b], S::zero(), None, BuildLimit(None))?;
    Ok((t.l_subset(), optimal_alignment(problem, &t)?))
}

/// Star alignment bound: pick the sequence whose pairwise optima to all
/// others sum lowest, merge its optimal pairwise alignments ("once a gap,
/// always a gap") and score the result under full gap charging.
pub fn star_upper_bound<S: Cost>(problem: &Problem<S>) -> Result<(S, Alignment)> {
    let b = Bounds::compute(problem)?;
    Ok((b.upper, b.witness))
}

fn star_merge<S: Cost>(
    problem: &Problem<S>,
    per_pair: &[S],
    alignments: &[Alignment],
) -> (S, Alignment) {
    let k = problem.k();
    let center = (0..k)
        .min_by_key(|&c| {
            (0..k).filter(|&j| j != c).fold(S::zero(), |a, j| {
                a + per_pair[pair_index(c.min(j), c.max(j), k)]
            })
        })
        .expect("k >= 2");
    let cbit = Direction::bit(center, k);
    // The profile starts as the center sequence on its own.
    let mut cols: Vec<u32> = vec![cbit; problem.lens()[center] as usize];
    for j in (0..k).filter(|&j| j != center) {
        let jbit = Direction::bit(j, k);
        let pair = &alignments[pair_index(center.min(j), center.max(j), k)];
        // (center advances, j advances) per pair column
        let flags: Vec<(bool, bool)> = pair
            .columns()
            .iter()
            .map(|d| {
                let (a, b) = (d.has(0, 2), d.has(1, 2));
                if center < j {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        let mut merged = Vec::with_capacity(cols.len() + flags.len());
        let (mut p, mut q) = (0, 0);
        while p < cols.len() || q < flags.len() {
            if p < cols.len() && cols[p] & cbit == 0 {
                merged.push(cols[p]);
                p += 1;
            } else if q < flags.len() && !flags[q].0 {
                merged.push(jbit);
                q += 1;
            } else {
                let (_, adv) = flags[q];
                merged.push(cols[p] | if adv { jbit } else { 0 });
                p += 1;
                q += 1;
            }
        }
        cols = merged;
    }
    let aln = Alignment::new(k, cols.into_iter().map(Direction).collect());
    debug_assert!(aln.validate(problem.lens()).is_ok());
    (problem.path_cost(&aln, GapCharging::Full), aln)
}

/// C(k-2, m-2)·U − Σ subset optima, clamped at zero.
pub fn carrillo_lipman_delta<S: Cost>(upper: S, optima_sum: S, k: usize, m: usize) -> S {
    let raw = S::of(binomial(k - 2, m - 2) as i64) * upper - optima_sum;
    if raw < S::zero() {
        log::warn!("negative Carrillo-Lipman slack {raw}; the lower bound already certifies the upper bound");
        S::zero()
    } else {
        raw
    }
}
