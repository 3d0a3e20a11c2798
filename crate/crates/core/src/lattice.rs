//! The k-dimensional alignment lattice with edge-based states.
//!
//! A search state is a lattice edge: its head vertex plus the direction it was
//! entered from. Affine gap charges then depend only on two consecutive edges.
//! Coordinates run over `[-1, N_i + 1]`; the search starts from the dummy
//! diagonal edge `(-1,..,-1) -> (0,..,0)` and ends at the dummy diagonal edge
//! `(N_1,..,N_k) -> (N_1+1,..,N_k+1)`.
//!
//! Directions are bit masks with sequence 0 in the most significant of the `k`
//! bits, so ascending numeric order is lexicographic order over sequences.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Cost;
use crate::seqio::{CostModel, EndGapMode, Sequence, GAP_CHAR};

/// Largest number of sequences the lattice supports.
pub const MAX_SEQUENCES: usize = 24;
/// Largest sequence length (coordinates must fit 16 bits with dummies).
pub const MAX_LENGTH: usize = (1 << 16) - 3;

/// Direction bit mask of `k` bits; see the module docs for the bit order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Direction(pub u32);

impl Direction {
    #[inline]
    pub fn bit(i: usize, k: usize) -> u32 {
        1 << (k - 1 - i)
    }

    #[inline]
    pub fn all(k: usize) -> Self {
        Direction((1u32 << k) - 1)
    }

    #[inline]
    pub fn has(self, i: usize, k: usize) -> bool {
        self.0 & Self::bit(i, k) != 0
    }

    #[inline]
    pub fn get(self, i: usize, k: usize) -> i32 {
        i32::from(self.has(i, k))
    }

    pub fn popcount(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn from_flags(flags: &[bool]) -> Self {
        let k = flags.len();
        Direction(
            flags
                .iter()
                .enumerate()
                .filter(|(_, &f)| f)
                .map(|(i, _)| Self::bit(i, k))
                .sum(),
        )
    }

    /// Restrict to `subset` (strictly increasing indices), re-packed as an
    /// `m`-bit direction.
    pub fn project(self, subset: &[usize], k: usize) -> Self {
        let m = subset.len();
        let mut out = 0;
        for (pos, &i) in subset.iter().enumerate() {
            if self.has(i, k) {
                out |= Self::bit(pos, m);
            }
        }
        Direction(out)
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dir({:#b})", self.0)
    }
}

/// Packed identity of a lattice edge: head coordinates (shifted by one so the
/// dummy coordinate -1 fits) followed by the direction bits. Coordinate 0 is
/// most significant, so the derived order is lexicographic in the head and
/// then numeric in the direction.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeKey(pub u128);

/// Packs and unpacks [`EdgeKey`]s for one problem's coordinate ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyCodec {
    k: usize,
    shifts: Vec<u32>,
    masks: Vec<u128>,
}

impl KeyCodec {
    pub fn new(lens: &[usize]) -> Result<Self> {
        let k = lens.len();
        let widths: Vec<u32> = lens
            .iter()
            .map(|&n| {
                // values 0..=n+2 after the +1 shift
                let max = (n + 2) as u64;
                64 - max.leading_zeros()
            })
            .collect();
        let total: u32 = widths.iter().sum::<u32>() + k as u32;
        if total > 128 {
            return Err(Error::InvalidProblem(format!(
                "edge key needs {total} bits; at most 128 are supported"
            )));
        }
        let mut shifts = vec![0; k];
        let mut acc = k as u32;
        for i in (0..k).rev() {
            shifts[i] = acc;
            acc += widths[i];
        }
        let masks = widths.iter().map(|&w| (1u128 << w) - 1).collect();
        Ok(Self { k, shifts, masks })
    }

    #[inline]
    pub fn pack(&self, head: &[i32], dir: Direction) -> EdgeKey {
        let mut v = dir.0 as u128;
        for (i, &c) in head.iter().enumerate() {
            v |= ((c + 1) as u128) << self.shifts[i];
        }
        EdgeKey(v)
    }

    #[inline]
    pub fn unpack(&self, key: EdgeKey, head: &mut [i32]) -> Direction {
        for (i, h) in head.iter_mut().enumerate() {
            *h = ((key.0 >> self.shifts[i]) & self.masks[i]) as i32 - 1;
        }
        Direction((key.0 & ((1u128 << self.k) - 1)) as u32)
    }

    #[inline]
    pub fn dir(&self, key: EdgeKey) -> Direction {
        Direction((key.0 & ((1u128 << self.k) - 1)) as u32)
    }

    #[inline]
    pub fn coord(&self, key: EdgeKey, i: usize) -> i32 {
        ((key.0 >> self.shifts[i]) & self.masks[i]) as i32 - 1
    }

    /// Sum of head coordinates (the antidiagonal level).
    #[inline]
    pub fn level(&self, key: EdgeKey) -> i64 {
        (0..self.k).map(|i| i64::from(self.coord(key, i))).sum()
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Which convention charges the gap-opening penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapCharging {
    /// Whole penalty on the edge that opens a gap.
    Full,
    /// Half on the opening edge and half on the edge after the gap closes.
    Half,
}

/// An alignment instance: sequences, scaled costs, and the key codec.
#[derive(Clone, Debug)]
pub struct Problem<S> {
    ids: Vec<String>,
    seqs: Vec<Vec<u8>>,
    lens: Vec<i32>,
    cost: CostModel<S>,
    codec: KeyCodec,
}

impl<S: Cost> Problem<S> {
    pub fn new(sequences: Vec<Sequence>, cost: CostModel<S>) -> Result<Self> {
        let k = sequences.len();
        if k < 2 {
            return Err(Error::InvalidProblem(format!(
                "need at least 2 sequences, got {k}"
            )));
        }
        if k > MAX_SEQUENCES {
            return Err(Error::InvalidProblem(format!(
                "at most {MAX_SEQUENCES} sequences are supported, got {k}"
            )));
        }
        for s in &sequences {
            if s.len() > MAX_LENGTH {
                return Err(Error::InvalidProblem(format!(
                    "sequence {} has length {} (limit {MAX_LENGTH})",
                    s.id,
                    s.len()
                )));
            }
            if let Some(&r) = s
                .residues
                .iter()
                .find(|&&r| r as usize >= cost.alphabet_size())
            {
                return Err(Error::InvalidProblem(format!(
                    "sequence {} has residue index {r} outside the alphabet",
                    s.id
                )));
            }
        }
        let lens_usize: Vec<usize> = sequences.iter().map(|s| s.len()).collect();
        let codec = KeyCodec::new(&lens_usize)?;

        // Worst case: every edge of the longest path pays every pair's largest
        // penalty plus two half-openings.
        let pairs = (k * (k - 1) / 2) as i128;
        let per_pair = cost.max_pair_penalty().as_i64() as i128 + cost.gap_open.as_i64() as i128;
        let edges = lens_usize.iter().sum::<usize>() as i128 + 2;
        let worst = edges * pairs * per_pair;
        if worst >= S::unreached().as_i64() as i128 / 4 {
            return Err(Error::InvalidProblem(format!(
                "worst-case path cost {worst} could overflow the cost type"
            )));
        }

        Ok(Self {
            ids: sequences.iter().map(|s| s.id.clone()).collect(),
            lens: lens_usize.iter().map(|&n| n as i32).collect(),
            seqs: sequences.into_iter().map(|s| s.residues).collect(),
            cost,
            codec,
        })
    }

    /// The problem restricted to `subset` (strictly increasing indices).
    pub fn subproblem(&self, subset: &[usize]) -> Result<Self> {
        debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
        let seqs = subset
            .iter()
            .map(|&i| Sequence {
                id: self.ids[i].clone(),
                residues: self.seqs[i].clone(),
            })
            .collect();
        Self::new(seqs, self.cost.clone())
    }

    pub fn k(&self) -> usize {
        self.lens.len()
    }

    pub fn lens(&self) -> &[i32] {
        &self.lens
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn residues(&self, i: usize) -> &[u8] {
        &self.seqs[i]
    }

    pub fn cost_model(&self) -> &CostModel<S> {
        &self.cost
    }

    pub fn codec(&self) -> &KeyCodec {
        &self.codec
    }

    pub fn max_len(&self) -> i32 {
        self.lens.iter().copied().max().unwrap_or(0)
    }

    pub fn start_edge(&self) -> EdgeKey {
        let head = vec![0; self.k()];
        self.codec.pack(&head, Direction::all(self.k()))
    }

    pub fn target_edge(&self) -> EdgeKey {
        let head: Vec<i32> = self.lens.iter().map(|&n| n + 1).collect();
        self.codec.pack(&head, Direction::all(self.k()))
    }

    /// Level of the target dummy edge's head, the largest level in the lattice.
    pub fn target_level(&self) -> i64 {
        self.lens.iter().map(|&n| i64::from(n)).sum::<i64>() + self.k() as i64
    }

    pub fn is_corner(&self, head: &[i32]) -> bool {
        head.iter().zip(&self.lens).all(|(&h, &n)| h == n)
    }

    pub fn is_target_head(&self, head: &[i32]) -> bool {
        head.iter().zip(&self.lens).all(|(&h, &n)| h == n + 1)
    }

    /// Mask of sequences that can still advance from `head`.
    #[inline]
    pub fn free_mask(&self, head: &[i32]) -> u32 {
        let k = self.k();
        let mut free = 0;
        for i in 0..k {
            if head[i] < self.lens[i] {
                free |= Direction::bit(i, k);
            }
        }
        free
    }

    /// Successor directions of an edge with the given head, ascending.
    /// The corner vertex is followed only by the target dummy edge's
    /// direction; the target dummy edge has none.
    pub fn successor_dirs(&self, head: &[i32]) -> Vec<Direction> {
        let mut out = Vec::new();
        self.for_each_successor_dir(head, |d| out.push(d));
        out
    }

    #[inline]
    pub fn for_each_successor_dir(&self, head: &[i32], mut f: impl FnMut(Direction)) {
        if self.is_target_head(head) {
            return;
        }
        if self.is_corner(head) {
            f(Direction::all(self.k()));
            return;
        }
        let free = self.free_mask(head);
        // ascending enumeration of the non-empty submasks of `free`
        let mut d: u32 = 0;
        loop {
            d = d.wrapping_sub(free) & free;
            if d == 0 {
                break;
            }
            f(Direction(d));
        }
    }

    /// Successor edges of `e`, ascending in direction.
    pub fn successors(&self, e: EdgeKey) -> Vec<EdgeKey> {
        let mut head = vec![0; self.k()];
        self.codec.unpack(e, &mut head);
        let mut next = head.clone();
        self.successor_dirs(&head)
            .into_iter()
            .map(|d| {
                for i in 0..self.k() {
                    next[i] = head[i] + d.get(i, self.k());
                }
                self.codec.pack(&next, d)
            })
            .collect()
    }

    /// Predecessor edges of `e` (edges whose head is `e`'s tail).
    pub fn predecessors(&self, e: EdgeKey) -> Vec<EdgeKey> {
        let k = self.k();
        let mut head = vec![0; k];
        let dir = self.codec.unpack(e, &mut head);
        if e == self.start_edge() {
            return Vec::new();
        }
        let tail: Vec<i32> = (0..k).map(|i| head[i] - dir.get(i, k)).collect();
        let start_head = vec![0; k];
        if tail == start_head {
            return vec![self.start_edge()];
        }
        let mut out = Vec::new();
        let mut prev = vec![0; k];
        for p in 1..(1u32 << k) {
            let p = Direction(p);
            let ok = (0..k).all(|i| tail[i] - p.get(i, k) >= 0);
            if ok {
                prev.copy_from_slice(&tail[..k]);
                let key = self.codec.pack(&prev, p);
                // the tail of the predecessor must itself be in range
                out.push(key);
            }
        }
        out
    }

    #[inline]
    fn exempt(&self, seq: usize, coord: i32) -> bool {
        coord == 0 || coord == self.lens[seq]
    }

    /// Sum-of-pairs column cost of entering `head` along `dir`: substitution
    /// for pairs that both advance, extension for pairs where exactly one
    /// does, nothing for pairs that both stay put.
    #[inline]
    pub fn column_cost(&self, dir: Direction, head: &[i32]) -> S {
        let k = self.k();
        if self.is_target_head(head) {
            return S::zero();
        }
        let cm = &self.cost;
        let all_free = cm.end_gap_mode == EndGapMode::AllFree;
        let mut total = S::zero();
        for i in 0..k {
            let di = dir.has(i, k);
            for j in (i + 1)..k {
                let dj = dir.has(j, k);
                match (di, dj) {
                    (true, true) => {
                        let a = self.seqs[i][head[i] as usize - 1];
                        let b = self.seqs[j][head[j] as usize - 1];
                        total = total + cm.sub(a, b);
                    }
                    (true, false) => {
                        if !(all_free && self.exempt(j, head[j])) {
                            total = total + cm.gap_extend;
                        }
                    }
                    (false, true) => {
                        if !(all_free && self.exempt(i, head[i])) {
                            total = total + cm.gap_extend;
                        }
                    }
                    (false, false) => {}
                }
            }
        }
        total
    }

    /// Gap-opening charges for following an edge with direction `prev` by an
    /// edge with direction `next` whose head is `head`.
    ///
    /// A pair opens a gap when its projected next step is a single gap that
    /// differs from its projected previous step (a projected `(0,0)` counts
    /// as different). In half mode, the step after a single gap that differs
    /// from it also pays half the opening penalty.
    #[inline]
    pub fn gap_open_cost(
        &self,
        prev: Direction,
        next: Direction,
        head: &[i32],
        mode: GapCharging,
    ) -> S {
        let k = self.k();
        let cm = &self.cost;
        if cm.gap_open.is_zero() {
            return S::zero();
        }
        let ends_charged = cm.end_gap_mode == EndGapMode::Charged;
        let (open, close) = match mode {
            GapCharging::Full => (cm.gap_open, S::zero()),
            GapCharging::Half => (cm.half_open, cm.half_open),
        };
        let mut total = S::zero();
        for i in 0..k {
            let (ni, pi) = (next.has(i, k), prev.has(i, k));
            for j in (i + 1)..k {
                let (nj, pj) = (next.has(j, k), prev.has(j, k));
                let next_single = ni != nj;
                let prev_single = pi != pj;
                let same = ni == pi && nj == pj;
                if next_single && !same {
                    let gapped = if ni { j } else { i };
                    if ends_charged || !self.exempt(gapped, head[gapped]) {
                        total = total + open;
                    }
                }
                if mode == GapCharging::Half && prev_single && !same {
                    let gapped = if pi { j } else { i };
                    let coord = head[gapped] - next.get(gapped, k);
                    if ends_charged || !self.exempt(gapped, coord) {
                        total = total + close;
                    }
                }
            }
        }
        total
    }

    /// Cost of following an edge with direction `prev` by the edge
    /// (`head`, `next`).
    #[inline]
    pub fn transition_cost(
        &self,
        prev: Direction,
        next: Direction,
        head: &[i32],
        mode: GapCharging,
    ) -> S {
        self.column_cost(next, head) + self.gap_open_cost(prev, next, head, mode)
    }

    /// Total cost of an alignment as a lattice path from the start dummy to
    /// the target dummy.
    pub fn path_cost(&self, alignment: &Alignment, mode: GapCharging) -> S {
        let k = self.k();
        let mut head = vec![0; k];
        let mut prev = Direction::all(k);
        let mut total = S::zero();
        for &d in alignment.columns() {
            for i in 0..k {
                head[i] += d.get(i, k);
            }
            total = total + self.transition_cost(prev, d, &head, mode);
            prev = d;
        }
        for h in head.iter_mut() {
            *h += 1;
        }
        total + self.transition_cost(prev, Direction::all(k), &head, mode)
    }
}

/// Head level of an edge.
pub fn edge_level(codec: &KeyCodec, e: EdgeKey) -> i64 {
    codec.level(e)
}

/// Project an edge onto a subset of sequences, packed with `sub_codec`.
/// The projected direction may be zero when no selected sequence advances.
pub fn project(codec: &KeyCodec, e: EdgeKey, subset: &[usize], sub_codec: &KeyCodec) -> EdgeKey {
    let k = codec.k();
    let mut head = vec![0; k];
    let dir = codec.unpack(e, &mut head);
    let sub_head: Vec<i32> = subset.iter().map(|&i| head[i]).collect();
    sub_codec.pack(&sub_head, dir.project(subset, k))
}

/// A global alignment as the sequence of lattice steps (one per column).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    k: usize,
    columns: Vec<Direction>,
}

impl Alignment {
    pub fn new(k: usize, columns: Vec<Direction>) -> Self {
        Self { k, columns }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn columns(&self) -> &[Direction] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Checks that every column advances some sequence and each sequence is
    /// consumed exactly once.
    pub fn validate(&self, lens: &[i32]) -> Result<()> {
        if lens.len() != self.k {
            return Err(Error::InvalidProblem("alignment arity mismatch".into()));
        }
        let mut used = vec![0i32; self.k];
        for (c, d) in self.columns.iter().enumerate() {
            if d.is_zero() || d.0 >= (1 << self.k) {
                return Err(Error::InvalidProblem(format!("invalid column {c}: {d:?}")));
            }
            for (i, u) in used.iter_mut().enumerate() {
                *u += d.get(i, self.k);
            }
        }
        if used != lens {
            return Err(Error::InvalidProblem(format!(
                "alignment consumes {used:?}, sequences have lengths {lens:?}"
            )));
        }
        Ok(())
    }

    /// Rows as residue indices, `None` for gaps.
    pub fn rows(&self, seqs: &[&[u8]]) -> Vec<Vec<Option<u8>>> {
        let mut pos = vec![0usize; self.k];
        let mut rows = vec![Vec::with_capacity(self.columns.len()); self.k];
        for d in &self.columns {
            for i in 0..self.k {
                if d.has(i, self.k) {
                    rows[i].push(Some(seqs[i][pos[i]]));
                    pos[i] += 1;
                } else {
                    rows[i].push(None);
                }
            }
        }
        rows
    }

    /// Lower-case text rows with `_` for gaps.
    pub fn render_rows<S: Cost>(
        &self,
        problem: &Problem<S>,
        alphabet: &crate::seqio::Alphabet,
    ) -> Vec<String> {
        let seqs: Vec<&[u8]> = (0..self.k).map(|i| problem.residues(i)).collect();
        self.rows(&seqs)
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|r| match r {
                        Some(idx) => alphabet.symbol(idx).to_ascii_lowercase(),
                        None => GAP_CHAR,
                    })
                    .collect()
            })
            .collect()
    }

    /// Rebuild from text rows (`_` or `-` are gaps); used by tests and tools.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let k = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidProblem("ragged alignment rows".into()));
        }
        let bytes: Vec<&[u8]> = rows.iter().map(|r| r.as_bytes()).collect();
        let mut columns = Vec::with_capacity(width);
        for c in 0..width {
            let flags: Vec<bool> = bytes.iter().map(|r| r[c] != b'_' && r[c] != b'-').collect();
            let d = Direction::from_flags(&flags);
            if !d.is_zero() {
                columns.push(d);
            }
        }
        Ok(Self { k, columns })
    }

    /// The induced alignment of a subset, dropping all-gap columns.
    pub fn project(&self, subset: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|d| d.project(subset, self.k))
            .filter(|d| !d.is_zero())
            .collect();
        Self {
            k: subset.len(),
            columns,
        }
    }

    /// Edge keys of the lattice path, start and target dummies included.
    pub fn edges<S: Cost>(&self, problem: &Problem<S>) -> Vec<EdgeKey> {
        let k = self.k;
        let mut head = vec![0; k];
        let mut out = Vec::with_capacity(self.columns.len() + 2);
        out.push(problem.start_edge());
        for &d in &self.columns {
            for (i, h) in head.iter_mut().enumerate() {
                *h += d.get(i, k);
            }
            out.push(problem.codec().pack(&head, d));
        }
        out.push(problem.target_edge());
        out
    }

    /// Rebuild from a lattice path of edge keys (dummies optional).
    pub fn from_edges(codec: &KeyCodec, edges: &[EdgeKey], lens: &[i32]) -> Self {
        let k = codec.k();
        let mut head = vec![0; k];
        let columns = edges
            .iter()
            .filter_map(|&e| {
                let d = codec.unpack(e, &mut head);
                let is_start = head.iter().all(|&h| h == 0);
                let is_target = head.iter().zip(lens).all(|(&h, &n)| h == n + 1);
                (!is_start && !is_target).then_some(d)
            })
            .collect();
        Self { k, columns }
    }
}
