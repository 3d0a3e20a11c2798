//! Bounded goal-distance tables for sequence subsets.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{project, Alignment, Direction, EdgeKey, GapCharging, KeyCodec, Problem};
use crate::scalar::Cost;

/// Goal distances for one subset, kept only for edges that lie on some
/// subset path of cost at most `l_subset + delta`.
///
/// Besides the edges themselves the table stores, under the head's key with
/// direction 0, the distance from a vertex the subset is waiting at without
/// an open gap: the value the full search needs when an edge leaves every
/// sequence of the subset untouched.
#[derive(Debug, Clone)]
pub struct HeuristicTable<S> {
    subset: Vec<usize>,
    l_subset: S,
    delta: S,
    codec: KeyCodec,
    entries: FxHashMap<EdgeKey, S>,
    edge_entries: usize,
}

/// Maximum number of search records a table build may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildLimit(pub Option<usize>);

impl<S: Cost> HeuristicTable<S> {
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    /// Optimal cost of aligning the subset alone.
    pub fn l_subset(&self) -> S {
        self.l_subset
    }

    pub fn delta(&self) -> S {
        self.delta
    }

    pub fn codec(&self) -> &KeyCodec {
        &self.codec
    }

    /// Stored values, both edges and gap-closed vertex states.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of stored edges (gap-closed vertex states excluded).
    pub fn edge_count(&self) -> usize {
        self.edge_entries
    }

    /// Lookup by projected key. A zero direction asks for the gap-closed
    /// vertex value.
    #[inline]
    pub fn get(&self, key: EdgeKey) -> Option<S> {
        self.entries.get(&key).copied()
    }

    /// Lookup of a full-problem edge through projection.
    pub fn lookup(&self, full_codec: &KeyCodec, e: EdgeKey) -> Option<S> {
        self.get(project(full_codec, e, &self.subset, &self.codec))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeKey, S)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

/// Build the table for `subset` with retention slack `delta` (scaled).
///
/// The forward pass is A* from the subset start edge, guided by
/// `pair_tables` when given (indexed as `pair_tables[a][b]` over subset
/// positions, missing values counted as zero), until the smallest open
/// f-value exceeds `L + delta`. The backward pass then runs over the closed
/// edges in descending level order.
pub fn build_table<S: Cost>(
    problem: &Problem<S>,
    subset: &[usize],
    delta: S,
    pair_tables: Option<&PairLookup<'_, S>>,
    limit: BuildLimit,
) -> Result<HeuristicTable<S>> {
    if subset.len() < 2
        || subset.windows(2).any(|w| w[0] >= w[1])
        || subset[subset.len() - 1] >= problem.k()
    {
        return Err(Error::InvalidProblem(format!("bad subset {subset:?}")));
    }
    if delta < S::zero() {
        return Err(Error::InvalidProblem("negative table slack".into()));
    }
    let sub = problem.subproblem(subset)?;
    let codec = sub.codec().clone();
    let m = sub.k();
    let start = sub.start_edge();
    let target = sub.target_edge();
    let h = |e: EdgeKey| -> S {
        match pair_tables {
            Some(pt) => pt.sum_or_zero(&codec, e),
            None => S::zero(),
        }
    };
    let over_budget = |n: usize| limit.0.is_some_and(|cap| n > cap);
    let budget_error = || {
        Error::MemoryBudget(format!(
            "heuristic table for subset {subset:?} with delta {} exceeds {} records",
            delta.as_i64(),
            limit.0.unwrap_or(0)
        ))
    };

    // Forward pass.
    let mut g: FxHashMap<EdgeKey, S> = FxHashMap::default();
    let mut closed: FxHashMap<EdgeKey, S> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    g.insert(start, S::zero());
    heap.push(Reverse((h(start), start)));
    let mut l_subset: Option<S> = None;
    let mut head = vec![0i32; m];
    let mut next = vec![0i32; m];
    while let Some(Reverse((f, e))) = heap.pop() {
        if let Some(l) = l_subset {
            if f > l + delta {
                break;
            }
        }
        let ge = g[&e];
        if f != ge + h(e) || closed.get(&e).is_some_and(|&c| c <= ge) {
            continue;
        }
        closed.insert(e, ge);
        if e == target {
            l_subset.get_or_insert(ge);
            continue;
        }
        if over_budget(g.len()) {
            return Err(budget_error());
        }
        let dir = codec.unpack(e, &mut head);
        sub.for_each_successor_dir(&head, |d| {
            for i in 0..m {
                next[i] = head[i] + d.get(i, m);
            }
            let child = codec.pack(&next, d);
            let ng = ge + sub.transition_cost(dir, d, &next, GapCharging::Half);
            let better = g.get(&child).is_none_or(|&old| ng < old);
            if better {
                g.insert(child, ng);
                heap.push(Reverse((ng + h(child), child)));
            }
        });
    }
    let l_subset =
        l_subset.ok_or_else(|| Error::Reconstruction("subset target unreachable".into()))?;
    let bound = l_subset + delta;
    drop(heap);
    drop(g);

    // Backward pass over closed edges, highest level first.
    let mut order: Vec<(i64, EdgeKey)> = closed.keys().map(|&e| (codec.level(e), e)).collect();
    order.sort_unstable_by(|a, b| b.cmp(a));
    let mut dist: FxHashMap<EdgeKey, S> = FxHashMap::default();
    dist.reserve(order.len());
    dist.insert(target, S::zero());
    for &(_, e) in &order {
        if e == target {
            continue;
        }
        let dir = codec.unpack(e, &mut head);
        let mut best: Option<S> = None;
        sub.for_each_successor_dir(&head, |d| {
            for i in 0..m {
                next[i] = head[i] + d.get(i, m);
            }
            if let Some(&t) = dist.get(&codec.pack(&next, d)) {
                let c = sub.transition_cost(dir, d, &next, GapCharging::Half) + t;
                best = Some(best.map_or(c, |b: S| b.min(c)));
            }
        });
        if let Some(b) = best {
            dist.insert(e, b);
        }
    }

    let mut entries: FxHashMap<EdgeKey, S> = FxHashMap::default();
    for (&e, &t) in &dist {
        if closed.get(&e).is_some_and(|&ge| ge + t <= bound) {
            entries.insert(e, t);
        }
    }
    let edge_entries = entries.len();

    // Gap-closed vertex values. A vertex state is kept only if it lies in the
    // band itself: its cheapest arrival (closing any open gap) plus its value
    // stays within the bound. Its whole continuation is then retained and the
    // value is exact.
    let mut closed_vals: FxHashMap<EdgeKey, S> = FxHashMap::default();
    let mut seen: FxHashMap<EdgeKey, ()> = FxHashMap::default();
    for &e in entries.keys() {
        if e == target {
            continue;
        }
        codec.unpack(e, &mut head);
        let vkey = codec.pack(&head, Direction(0));
        if seen.insert(vkey, ()).is_some() {
            continue;
        }
        let mut best: Option<S> = None;
        sub.for_each_successor_dir(&head, |d| {
            for i in 0..m {
                next[i] = head[i] + d.get(i, m);
            }
            if let Some(&t) = entries.get(&codec.pack(&next, d)) {
                let c = sub.transition_cost(Direction(0), d, &next, GapCharging::Half) + t;
                best = Some(best.map_or(c, |b: S| b.min(c)));
            }
        });
        let Some(b) = best else { continue };
        let mut arrival: Option<S> = None;
        for d in 1..(1u32 << m) {
            let d = Direction(d);
            if let Some(&ge) = closed.get(&codec.pack(&head, d)) {
                let a = ge + sub.gap_open_cost(d, Direction(0), &head, GapCharging::Half);
                arrival = Some(arrival.map_or(a, |x: S| x.min(a)));
            }
        }
        if arrival.is_some_and(|a| a + b <= bound) {
            closed_vals.insert(vkey, b);
        }
    }
    entries.extend(closed_vals);
    if over_budget(entries.len()) {
        return Err(budget_error());
    }

    Ok(HeuristicTable {
        subset: subset.to_vec(),
        l_subset,
        delta,
        codec,
        entries,
        edge_entries,
    })
}

/// Pairwise tables addressed by positions inside a subset.
pub struct PairLookup<'a, S> {
    /// `(a, b, table)` with `a < b` positions in the subset.
    pub pairs: Vec<(usize, usize, &'a HeuristicTable<S>)>,
}

impl<S: Cost> PairLookup<'_, S> {
    /// Sum of pair values for a subset edge, missing values counted as 0.
    fn sum_or_zero(&self, codec: &KeyCodec, e: EdgeKey) -> S {
        let mut total = S::zero();
        for &(a, b, t) in &self.pairs {
            if let Some(v) = t.get(project(codec, e, &[a, b], t.codec())) {
                total = total + v;
            }
        }
        total
    }
}

/// An optimal alignment of the table's subset, read off by following tight
/// table entries from the start edge.
pub fn optimal_alignment<S: Cost>(
    problem: &Problem<S>,
    table: &HeuristicTable<S>,
) -> Result<Alignment> {
    let sub = problem.subproblem(table.subset())?;
    let codec = table.codec();
    let m = sub.k();
    let target = sub.target_edge();
    let mut e = sub.start_edge();
    let mut path = vec![e];
    let mut head = vec![0; m];
    let mut next = vec![0; m];
    while e != target {
        let here = table
            .get(e)
            .ok_or_else(|| Error::Reconstruction("walk left the table".into()))?;
        let dir = codec.unpack(e, &mut head);
        let mut found = None;
        sub.for_each_successor_dir(&head, |d| {
            if found.is_some() {
                return;
            }
            for i in 0..m {
                next[i] = head[i] + d.get(i, m);
            }
            let child = codec.pack(&next, d);
            if let Some(t) = table.get(child) {
                if sub.transition_cost(dir, d, &next, GapCharging::Half) + t == here {
                    found = Some(child);
                }
            }
        });
        e = found.ok_or_else(|| Error::Reconstruction("no tight successor in table".into()))?;
        path.push(e);
    }
    Ok(Alignment::from_edges(codec, &path, sub.lens()))
}

const SPILL_MAGIC: &[u8; 4] = b"HTB1";

/// Write the table's edge entries: magic, `m`, subset indices, delta, L and
/// count, then one big-endian (u128 key, i64 distance) record per entry.
/// Gap-closed vertex values are derived data and are not written.
pub fn write_spill<S: Cost, W: Write>(table: &HeuristicTable<S>, mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Spill(e.to_string());
    w.write_all(SPILL_MAGIC).map_err(io)?;
    w.write_all(&(table.subset.len() as u32).to_be_bytes())
        .map_err(io)?;
    for &i in &table.subset {
        w.write_all(&(i as u32).to_be_bytes()).map_err(io)?;
    }
    w.write_all(&table.delta.as_i64().to_be_bytes())
        .map_err(io)?;
    w.write_all(&table.l_subset.as_i64().to_be_bytes())
        .map_err(io)?;
    let m = table.subset.len();
    let mut records: Vec<(EdgeKey, S)> = table
        .entries
        .iter()
        .filter(|(k, _)| table.codec.dir(**k).0 != 0)
        .map(|(&k, &v)| (k, v))
        .collect();
    records.sort_unstable();
    w.write_all(&(records.len() as u64).to_be_bytes())
        .map_err(io)?;
    debug_assert!(m >= 2);
    for (k, v) in records {
        w.write_all(&k.0.to_be_bytes()).map_err(io)?;
        w.write_all(&v.as_i64().to_be_bytes()).map_err(io)?;
    }
    Ok(())
}

/// Header and edge records of a spilled table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpillContents {
    pub subset: Vec<usize>,
    pub delta: i64,
    pub l_subset: i64,
    pub records: Vec<(EdgeKey, i64)>,
}

pub fn read_spill<R: Read>(mut r: R) -> Result<SpillContents> {
    let io = |e: std::io::Error| Error::Spill(e.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != SPILL_MAGIC {
        return Err(Error::Spill("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b16 = [0u8; 16];
    r.read_exact(&mut b4).map_err(io)?;
    let m = u32::from_be_bytes(b4) as usize;
    if !(2..=64).contains(&m) {
        return Err(Error::Spill(format!("implausible subset size {m}")));
    }
    let mut subset = Vec::with_capacity(m);
    for _ in 0..m {
        r.read_exact(&mut b4).map_err(io)?;
        subset.push(u32::from_be_bytes(b4) as usize);
    }
    r.read_exact(&mut b8).map_err(io)?;
    let delta = i64::from_be_bytes(b8);
    r.read_exact(&mut b8).map_err(io)?;
    let l_subset = i64::from_be_bytes(b8);
    r.read_exact(&mut b8).map_err(io)?;
    let count = u64::from_be_bytes(b8) as usize;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        r.read_exact(&mut b16).map_err(io)?;
        r.read_exact(&mut b8).map_err(io)?;
        records.push((EdgeKey(u128::from_be_bytes(b16)), i64::from_be_bytes(b8)));
    }
    Ok(SpillContents {
        subset,
        delta,
        l_subset,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqio::{build_cost_model, Alphabet, EndGapMode, RawMatrix, Sequence};

    fn problem(seqs: &[&str]) -> Problem<i64> {
        let m = RawMatrix::unit(b"AB").unwrap();
        let cm = build_cost_model(&m, 1, 1, EndGapMode::Charged).unwrap();
        let alpha = Alphabet::new(b"AB").unwrap();
        let seqs = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| Sequence {
                id: format!("s{i}"),
                residues: s.bytes().map(|c| alpha.index_of(c).unwrap()).collect(),
            })
            .collect();
        Problem::new(seqs, cm).unwrap()
    }

    #[test]
    fn identical_pair_keeps_only_diagonal() {
        let p = problem(&["ABBA", "ABBA"]);
        let t = build_table(&p, &[0, 1], 0, None, BuildLimit(None)).unwrap();
        assert_eq!(t.l_subset(), 0);
        // start, four diagonal edges, target
        assert_eq!(t.edge_count(), 6);
        for (k, v) in t.iter() {
            let d = t.codec().dir(k);
            assert!(d.0 == 0 || d.0 == 3, "{d:?}");
            assert_eq!(v, 0);
        }
    }

    #[test]
    fn start_value_is_optimum() {
        let p = problem(&["ABAB", "BBA", "AB"]);
        let t = build_table(&p, &[0, 2], 10, None, BuildLimit(None)).unwrap();
        let sub = p.subproblem(&[0, 2]).unwrap();
        assert_eq!(t.get(sub.start_edge()), Some(t.l_subset()));
        assert_eq!(t.get(sub.target_edge()), Some(0));
        let aln = optimal_alignment(&p, &t).unwrap();
        assert_eq!(sub.path_cost(&aln, GapCharging::Full), t.l_subset());
    }

    #[test]
    fn budget_is_enforced() {
        let p = problem(&["ABABABAB", "BABABABA"]);
        let err = build_table(&p, &[0, 1], 100, None, BuildLimit(Some(5))).unwrap_err();
        match err {
            Error::MemoryBudget(msg) => assert!(msg.contains("[0, 1]") && msg.contains("100")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spill_round_trip() {
        let p = problem(&["ABAB", "BBA"]);
        let t = build_table(&p, &[0, 1], 4, None, BuildLimit(None)).unwrap();
        let mut buf = Vec::new();
        write_spill(&t, &mut buf).unwrap();
        let back = read_spill(buf.as_slice()).unwrap();
        assert_eq!(back.subset, vec![0, 1]);
        assert_eq!(back.delta, 4);
        assert_eq!(back.l_subset, t.l_subset());
        assert_eq!(back.records.len(), t.edge_count());
        for (k, v) in back.records {
            assert_eq!(t.get(k), Some(v));
        }
        assert!(read_spill(&b"XXXX"[..]).is_err());
    }
}
