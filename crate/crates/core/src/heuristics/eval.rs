//! Evaluation of table-based heuristics with a prefix cache.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Direction, EdgeKey, Problem};
use crate::scalar::{binomial, Cost};

use super::table::{build_table, BuildLimit, HeuristicTable, PairLookup};
use super::{Heuristic, HeuristicKind};

/// Index of pair `(i, j)`, `i < j`, among the pairs of `k` sequences in
/// lexicographic order.
pub fn pair_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * k - i * (i + 1) / 2 + (j - i - 1)
}

/// All `m`-subsets of `0..k` in lexicographic order.
pub fn combinations(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    if m > k {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = m;
        while i > 0 && cur[i - 1] == k - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Pair(usize),
    Subset(usize),
}

#[derive(Debug, Clone)]
struct Term {
    subset: Vec<usize>,
    source: Source,
    /// Pair indices summed in place of a missing subset value.
    fallback: Vec<usize>,
}

impl Term {
    fn max_index(&self) -> usize {
        *self.subset.last().unwrap()
    }
}

/// Pairwise and subset tables for one problem and heuristic kind.
#[derive(Debug, Clone)]
pub struct TableSet<S> {
    pub(crate) pairs: Vec<HeuristicTable<S>>,
    pub(crate) subsets: Vec<HeuristicTable<S>>,
}

impl<S: Cost> TableSet<S> {
    /// Build every table `kind` needs. Pair tables are built first (in
    /// parallel) and then guide the subset builds.
    pub fn build(
        problem: &Problem<S>,
        kind: HeuristicKind,
        delta_pair: S,
        delta_m: S,
        limit: BuildLimit,
    ) -> Result<Self> {
        let pairs = Self::build_pairs(problem, kind, delta_pair, limit)?;
        let subsets = Self::build_subsets(problem, kind, delta_m, &pairs, limit)?;
        Ok(Self { pairs, subsets })
    }

    pub(crate) fn build_pairs(
        problem: &Problem<S>,
        kind: HeuristicKind,
        delta: S,
        limit: BuildLimit,
    ) -> Result<Vec<HeuristicTable<S>>> {
        if kind == HeuristicKind::Zero {
            return Ok(Vec::new());
        }
        combinations(problem.k(), 2)
            .into_par_iter()
            .map(|s| build_table(problem, &s, delta, None, limit))
            .collect()
    }

    pub(crate) fn build_subsets(
        problem: &Problem<S>,
        kind: HeuristicKind,
        delta: S,
        pairs: &[HeuristicTable<S>],
        limit: BuildLimit,
    ) -> Result<Vec<HeuristicTable<S>>> {
        let k = problem.k();
        subset_list(kind, k)?
            .into_par_iter()
            .map(|s| {
                let mut lookup = PairLookup { pairs: Vec::new() };
                for a in 0..s.len() {
                    for b in (a + 1)..s.len() {
                        lookup.pairs.push((a, b, &pairs[pair_index(s[a], s[b], k)]));
                    }
                }
                build_table(problem, &s, delta, Some(&lookup), limit)
            })
            .collect()
    }

    pub fn pairs(&self) -> &[HeuristicTable<S>] {
        &self.pairs
    }

    pub fn subsets(&self) -> &[HeuristicTable<S>] {
        &self.subsets
    }

    /// Total stored values across all tables.
    pub fn entries(&self) -> usize {
        self.pairs
            .iter()
            .chain(&self.subsets)
            .map(|t| t.len())
            .sum()
    }

    /// Σ of pairwise optima.
    pub fn l_total(&self) -> S {
        self.pairs.iter().fold(S::zero(), |a, t| a + t.l_subset())
    }

    /// Smallest pairwise slack, the bound up to which pair misses may prune.
    pub fn delta_pair(&self) -> Option<S> {
        self.pairs.iter().map(|t| t.delta()).min()
    }
}

/// Subsets of size ≥ 3 that `kind` needs tables for.
fn subset_list(kind: HeuristicKind, k: usize) -> Result<Vec<Vec<usize>>> {
    Ok(match kind {
        HeuristicKind::Zero | HeuristicKind::Pair => Vec::new(),
        HeuristicKind::All(m) => {
            if m < 2 || m > k {
                return Err(Error::InvalidProblem(format!(
                    "subset size {m} invalid for {k} sequences"
                )));
            }
            if m == 2 {
                Vec::new()
            } else {
                combinations(k, m)
            }
        }
        HeuristicKind::One(m) => {
            if m < 1 || m >= k {
                return Err(Error::InvalidProblem(format!(
                    "block size {m} invalid for {k} sequences"
                )));
            }
            [(0..m).collect::<Vec<_>>(), (m..k).collect()]
                .into_iter()
                .filter(|b| b.len() >= 3)
                .collect()
        }
    })
}

fn build_terms(kind: HeuristicKind, k: usize) -> Result<(Vec<Term>, i64)> {
    let pair_term = |i: usize, j: usize| Term {
        subset: vec![i, j],
        source: Source::Pair(pair_index(i, j, k)),
        fallback: Vec::new(),
    };
    let subset_term = |s: Vec<usize>, idx: usize| {
        let mut fallback = Vec::new();
        for a in 0..s.len() {
            for b in (a + 1)..s.len() {
                fallback.push(pair_index(s[a], s[b], k));
            }
        }
        Term {
            subset: s,
            source: Source::Subset(idx),
            fallback,
        }
    };
    let all_pairs = || {
        combinations(k, 2)
            .into_iter()
            .map(|p| pair_term(p[0], p[1]))
            .collect::<Vec<_>>()
    };
    let subsets = subset_list(kind, k)?;
    Ok(match kind {
        HeuristicKind::Zero => (Vec::new(), 1),
        HeuristicKind::Pair => (all_pairs(), 1),
        HeuristicKind::All(2) => (all_pairs(), 1),
        HeuristicKind::All(m) => (
            subsets
                .into_iter()
                .enumerate()
                .map(|(i, s)| subset_term(s, i))
                .collect(),
            binomial(k - 2, m - 2) as i64,
        ),
        HeuristicKind::One(m) => {
            let mut terms = Vec::new();
            let mut next_subset = 0;
            for block in [(0..m).collect::<Vec<_>>(), (m..k).collect()] {
                match block.len() {
                    0 | 1 => {}
                    2 => terms.push(pair_term(block[0], block[1])),
                    _ => {
                        terms.push(subset_term(block, next_subset));
                        next_subset += 1;
                    }
                }
            }
            for i in 0..m {
                for j in m..k {
                    terms.push(pair_term(i, j));
                }
            }
            (terms, 1)
        }
    })
}

/// Counters of table accesses and of successor evaluations that hit or
/// missed the primary tables.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccessCounters {
    /// Lookups in tables of size ≥ 3.
    pub subset_accesses: u64,
    /// Lookups in pair tables (including fallbacks).
    pub pair_accesses: u64,
    pub hits: u64,
    pub misses: u64,
}

/// h_pair, h_all,m or h_one,m over a [`TableSet`].
///
/// Successor estimates are accumulated per group of terms sharing the same
/// largest sequence index. Each group depends only on the step's leading
/// direction bits, so one value per prefix serves every successor, and the
/// groups for a vertex's unchanged leading coordinates carry over to the
/// next expanded vertex.
#[derive(Debug, Clone)]
pub struct TableHeuristic<S> {
    kind: HeuristicKind,
    k: usize,
    lens: Vec<i32>,
    tables: TableSet<S>,
    terms: Vec<Term>,
    /// Term indices grouped by largest sequence index.
    levels: Vec<Vec<usize>>,
    divisor: S,
    subset_primary: bool,
    caching: bool,
    cache_head: Option<Vec<i32>>,
    /// `partial[i][p]`: value of group `i` for leading bits `p`.
    partial: Vec<Vec<Option<S>>>,
    partial_miss: Vec<Vec<bool>>,
    pub counters: AccessCounters,
}

impl<S: Cost> TableHeuristic<S> {
    pub fn new(problem: &Problem<S>, kind: HeuristicKind, tables: TableSet<S>) -> Result<Self> {
        let k = problem.k();
        let (terms, div) = build_terms(kind, k)?;
        let expected_pairs = if kind == HeuristicKind::Zero {
            0
        } else {
            k * (k - 1) / 2
        };
        if tables.pairs.len() != expected_pairs
            || tables.subsets.len() != subset_list(kind, k)?.len()
        {
            return Err(Error::InvalidProblem(
                "table set does not match heuristic kind".into(),
            ));
        }
        let mut levels = vec![Vec::new(); k];
        for (t, term) in terms.iter().enumerate() {
            levels[term.max_index()].push(t);
        }
        let subset_primary = terms.iter().any(|t| matches!(t.source, Source::Subset(_)));
        Ok(Self {
            kind,
            k,
            lens: problem.lens().to_vec(),
            tables,
            terms,
            levels,
            divisor: S::of(div),
            subset_primary,
            caching: true,
            cache_head: None,
            partial: (0..k).map(|i| vec![None; 1 << (i + 1)]).collect(),
            partial_miss: (0..k).map(|i| vec![false; 1 << (i + 1)]).collect(),
            counters: AccessCounters::default(),
        })
    }

    pub fn kind(&self) -> HeuristicKind {
        self.kind
    }

    pub fn tables(&self) -> &TableSet<S> {
        &self.tables
    }

    /// Swap in rebuilt tables; drops the prefix cache.
    pub fn replace_tables(&mut self, tables: TableSet<S>) {
        self.tables = tables;
        self.cache_head = None;
    }

    pub(crate) fn tables_mut(&mut self) -> &mut TableSet<S> {
        self.cache_head = None;
        &mut self.tables
    }

    /// Whether the tables of size ≥ 3 are the primary family.
    pub fn subset_primary(&self) -> bool {
        self.subset_primary
    }

    /// Turn the prefix cache off to evaluate every successor from scratch.
    pub fn set_caching(&mut self, on: bool) {
        self.caching = on;
        self.cache_head = None;
    }

    fn is_target(&self, head: &[i32]) -> bool {
        head.iter().zip(&self.lens).all(|(&h, &n)| h == n + 1)
    }

    fn is_corner(&self, head: &[i32]) -> bool {
        head.iter().zip(&self.lens).all(|(&h, &n)| h == n)
    }

    /// Value of one term for the edge (`head`, `dir`); `head` is the edge's
    /// head. The flag reports a primary miss.
    #[inline]
    fn term_value(&mut self, t: usize, head: &[i32], dir: Direction) -> (Option<S>, bool) {
        let term = &self.terms[t];
        let key = |table: &HeuristicTable<S>| -> EdgeKey {
            let mut buf = [0i32; crate::lattice::MAX_SEQUENCES];
            for (pos, &s) in term.subset.iter().enumerate() {
                buf[pos] = head[s];
            }
            table
                .codec()
                .pack(&buf[..term.subset.len()], dir.project(&term.subset, self.k))
        };
        match term.source {
            Source::Pair(p) => {
                self.counters.pair_accesses += 1;
                let v = self.tables.pairs[p].get(key(&self.tables.pairs[p]));
                (v, v.is_none() && !self.subset_primary)
            }
            Source::Subset(s) => {
                self.counters.subset_accesses += 1;
                let table = &self.tables.subsets[s];
                if let Some(v) = table.get(key(table)) {
                    return (Some(v), false);
                }
                let mut sum = S::zero();
                let n = term.fallback.len();
                for f in 0..n {
                    let p = self.terms[t].fallback[f];
                    let table = &self.tables.pairs[p];
                    let (a, b) = (table.subset()[0], table.subset()[1]);
                    let pk = table
                        .codec()
                        .pack(&[head[a], head[b]], dir.project(&[a, b], self.k));
                    self.counters.pair_accesses += 1;
                    match table.get(pk) {
                        Some(v) => sum = sum + v,
                        None => return (None, true),
                    }
                }
                (Some(sum), true)
            }
        }
    }

    /// Uncached estimate of the edge (`head`, `dir`).
    fn direct(&mut self, head: &[i32], dir: Direction) -> (Option<S>, bool) {
        if self.is_target(head) {
            return (Some(S::zero()), false);
        }
        let mut total = S::zero();
        let mut missed = false;
        for t in 0..self.terms.len() {
            let (v, m) = self.term_value(t, head, dir);
            missed |= m;
            match v {
                Some(v) => total = total + v,
                None => return (None, true),
            }
        }
        (Some(total / self.divisor), missed)
    }

    fn count(&mut self, missed: bool) {
        if missed {
            self.counters.misses += 1;
        } else {
            self.counters.hits += 1;
        }
    }

    /// Refresh cached groups for successors of vertex `v`.
    fn refresh(&mut self, v: &[i32], free: u32) {
        let k = self.k;
        let first_diff = match &self.cache_head {
            Some(old) => old.iter().zip(v).position(|(a, b)| a != b).unwrap_or(k),
            None => 0,
        };
        let mut child = vec![0i32; k];
        for i in first_diff..k {
            let shift = k - 1 - i;
            let free_prefix = free >> shift;
            for p in 0..(1u32 << (i + 1)) {
                if p & !free_prefix != 0 {
                    continue;
                }
                let d = Direction(p << shift);
                for (s, c) in child.iter_mut().enumerate() {
                    *c = v[s] + d.get(s, k);
                }
                let mut sum = Some(S::zero());
                let mut missed = false;
                for idx in 0..self.levels[i].len() {
                    let t = self.levels[i][idx];
                    let (val, m) = self.term_value(t, &child, d);
                    missed |= m;
                    sum = match (sum, val) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                    if sum.is_none() {
                        missed = true;
                        break;
                    }
                }
                self.partial[i][p as usize] = sum;
                self.partial_miss[i][p as usize] = missed;
            }
        }
        self.cache_head = Some(v.to_vec());
    }
}

impl<S: Cost> Heuristic<S> for TableHeuristic<S> {
    fn estimate(&mut self, head: &[i32], dir: Direction) -> Option<S> {
        let (v, missed) = self.direct(head, dir);
        self.count(missed);
        v
    }

    fn successor_estimates(&mut self, v: &[i32], dirs: &[Direction], out: &mut Vec<Option<S>>) {
        out.clear();
        if self.is_corner(v) {
            out.extend(dirs.iter().map(|_| Some(S::zero())));
            return;
        }
        if !self.caching {
            let mut child = vec![0i32; self.k];
            for &d in dirs {
                for (s, c) in child.iter_mut().enumerate() {
                    *c = v[s] + d.get(s, self.k);
                }
                let (h, missed) = self.direct(&child, d);
                self.count(missed);
                out.push(h);
            }
            return;
        }
        let k = self.k;
        let mut free = 0;
        for i in 0..k {
            if v[i] < self.lens[i] {
                free |= Direction::bit(i, k);
            }
        }
        self.refresh(v, free);
        for &d in dirs {
            let mut sum = Some(S::zero());
            let mut missed = false;
            for i in 0..k {
                let p = (d.0 >> (k - 1 - i)) as usize;
                missed |= self.partial_miss[i][p];
                sum = match (sum, self.partial[i][p]) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
            }
            self.count(missed || sum.is_none());
            out.push(sum.map(|s| s / self.divisor));
        }
    }

    fn hits_misses(&self) -> (u64, u64) {
        (self.counters.hits, self.counters.misses)
    }

    fn reset_counters(&mut self) {
        self.counters.hits = 0;
        self.counters.misses = 0;
    }

    fn entries(&self) -> usize {
        self.tables.entries()
    }

    fn sound_limit(&self) -> Option<S> {
        self.tables.delta_pair().map(|d| self.tables.l_total() + d)
    }
}
