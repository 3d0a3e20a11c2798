//! Brute-force reference implementations for tests.
//!
//! Nothing here calls into the lattice successor or cost code: the step costs,
//! the edge indexing and the sweep order are written out separately so that
//! agreement with the search module means something.

use crate::error::{Error, Result};
use crate::lattice::{Alignment, Direction, GapCharging, Problem};
use crate::scalar::Cost;
use crate::seqio::EndGapMode;

/// Largest dense edge count `full_dp` accepts.
pub const DENSE_EDGE_CAP: u128 = 10_000_000;

const INF: i64 = i64::MAX / 4;

/// Plain-`i64` copy of everything the step cost needs.
struct Scorer {
    k: usize,
    lens: Vec<i32>,
    seqs: Vec<Vec<u8>>,
    n_sym: usize,
    sub: Vec<i64>,
    ext: i64,
    open: i64,
    half: i64,
    ends: EndGapMode,
}

impl Scorer {
    fn new<S: Cost>(p: &Problem<S>) -> Self {
        let cm = p.cost_model();
        let n_sym = cm.alphabet_size();
        let mut sub = vec![0; n_sym * n_sym];
        for a in 0..n_sym {
            for b in 0..n_sym {
                sub[a * n_sym + b] = cm.sub(a as u8, b as u8).as_i64();
            }
        }
        Self {
            k: p.k(),
            lens: p.lens().to_vec(),
            seqs: (0..p.k()).map(|i| p.residues(i).to_vec()).collect(),
            n_sym,
            sub,
            ext: cm.gap_extend.as_i64(),
            open: cm.gap_open.as_i64(),
            half: cm.half_open.as_i64(),
            ends: cm.end_gap_mode,
        }
    }

    fn at_end(&self, seq: usize, coord: i32) -> bool {
        coord == 0 || coord == self.lens[seq]
    }

    /// Flags of sequence `i` in a direction word (sequence 0 is the top bit).
    fn flag(&self, d: u32, i: usize) -> bool {
        (d >> (self.k - 1 - i)) & 1 == 1
    }

    /// Cost of stepping along `next` into `head` right after a step along
    /// `prev`. `target` marks the closing dummy step, which has no column.
    fn step(&self, prev: u32, next: u32, head: &[i32], target: bool, mode: GapCharging) -> i64 {
        let mut c = 0;
        for i in 0..self.k {
            for j in (i + 1)..self.k {
                let p = (self.flag(prev, i), self.flag(prev, j));
                let n = (self.flag(next, i), self.flag(next, j));
                c += self.pair_step(i, j, p, n, head, target, mode);
            }
        }
        c
    }

    #[allow(clippy::too_many_arguments)]
    fn pair_step(
        &self,
        i: usize,
        j: usize,
        p: (bool, bool),
        n: (bool, bool),
        head: &[i32],
        target: bool,
        mode: GapCharging,
    ) -> i64 {
        let mut c = 0;
        if !target {
            match n {
                (true, true) => {
                    let a = self.seqs[i][(head[i] - 1) as usize] as usize;
                    let b = self.seqs[j][(head[j] - 1) as usize] as usize;
                    c += self.sub[a * self.n_sym + b];
                }
                (true, false) | (false, true) => {
                    let g = if n.0 { j } else { i };
                    if !(self.ends == EndGapMode::AllFree && self.at_end(g, head[g])) {
                        c += self.ext;
                    }
                }
                (false, false) => {}
            }
        }
        let charged =
            |g: usize, coord: i32| self.ends == EndGapMode::Charged || !self.at_end(g, coord);
        if n.0 != n.1 && p != n {
            let g = if n.0 { j } else { i };
            if charged(g, head[g]) {
                c += match mode {
                    GapCharging::Full => self.open,
                    GapCharging::Half => self.half,
                };
            }
        }
        if mode == GapCharging::Half && p.0 != p.1 && p != n {
            let g = if p.0 { j } else { i };
            let coord = head[g] - i32::from(if g == i { n.0 } else { n.1 });
            if charged(g, coord) {
                c += self.half;
            }
        }
        c
    }
}

/// Dense forward and backward distances over every lattice edge.
///
/// Edges are indexed by `vertex * 2^k + dir`; the slot of the origin vertex
/// with the all-ones direction holds the start dummy edge.
pub struct DenseTable {
    k: usize,
    lens: Vec<i32>,
    radix: Vec<usize>,
    mode: GapCharging,
    fwd: Vec<i64>,
    bwd: Vec<i64>,
    g_star: i64,
}

impl DenseTable {
    fn index(&self, head: &[i32], dir: u32) -> Option<usize> {
        let mut v = 0;
        for i in 0..self.k {
            if head[i] < 0 || head[i] > self.lens[i] {
                return None;
            }
            v += head[i] as usize * self.radix[i];
        }
        Some((v << self.k) | dir as usize)
    }

    fn is_target(&self, head: &[i32]) -> bool {
        head.iter().zip(&self.lens).all(|(&h, &n)| h == n + 1)
    }

    /// Distance from the start dummy edge, `None` for edges outside the lattice.
    pub fn from_start(&self, head: &[i32], dir: Direction) -> Option<i64> {
        if self.is_target(head) {
            return Some(self.g_star);
        }
        let i = self.index(head, dir.0)?;
        (self.fwd[i] < INF).then_some(self.fwd[i])
    }

    /// Distance to the target dummy edge.
    pub fn to_target(&self, head: &[i32], dir: Direction) -> Option<i64> {
        if self.is_target(head) {
            return Some(0);
        }
        let i = self.index(head, dir.0)?;
        (self.bwd[i] < INF).then_some(self.bwd[i])
    }

    pub fn g_star(&self) -> i64 {
        self.g_star
    }

    pub fn mode(&self) -> GapCharging {
        self.mode
    }

    /// All valid edges (start dummy included, target dummy excluded) as
    /// `(head, dir)` pairs.
    pub fn edges(&self) -> Vec<(Vec<i32>, Direction)> {
        let mut out = Vec::new();
        let n_dirs = 1usize << self.k;
        for (slot, &f) in self.fwd.iter().enumerate() {
            if f < INF {
                let head = decode(slot >> self.k, &self.radix, &self.lens);
                out.push((head, Direction((slot & (n_dirs - 1)) as u32)));
            }
        }
        out
    }
}

fn decode(mut v: usize, radix: &[usize], lens: &[i32]) -> Vec<i32> {
    let mut head = vec![0; lens.len()];
    for i in (0..lens.len()).rev() {
        head[i] = (v / radix[i]) as i32;
        v %= radix[i];
    }
    head
}

/// Exact optimal cost, dense distance table and one optimal alignment.
///
/// Costs are in scaled units under the given gap charging.
pub fn full_dp_with<S: Cost>(
    problem: &Problem<S>,
    mode: GapCharging,
) -> Result<(i64, DenseTable, Alignment)> {
    let sc = Scorer::new(problem);
    let k = sc.k;
    let mut radix = vec![1usize; k];
    let mut vertices: u128 = 1;
    for i in 0..k {
        radix[i] = vertices.min(usize::MAX as u128) as usize;
        vertices = vertices.saturating_mul((sc.lens[i] + 1) as u128);
    }
    let edges = vertices.saturating_mul(1 << k);
    if edges > DENSE_EDGE_CAP {
        return Err(Error::TooLarge {
            edges,
            limit: DENSE_EDGE_CAP,
        });
    }
    let n_v = vertices as usize;
    let n_dirs = 1u32 << k;
    let all = n_dirs - 1;
    let mut fwd = vec![INF; n_v << k];
    let mut bwd = vec![INF; n_v << k];
    fwd[all as usize] = 0;

    let mut head = vec![0i32; k];
    let mut tail = vec![0i32; k];
    // Mixed-radix order is topological: every tail precedes its head.
    for v in 1..n_v {
        fill(&mut head, v, &radix, &sc.lens);
        for d in 1..n_dirs {
            let mut ok = true;
            for i in 0..k {
                tail[i] = head[i] - i32::from(sc.flag(d, i));
                ok &= tail[i] >= 0;
            }
            if !ok {
                continue;
            }
            let t = index_of(&tail, &radix);
            let mut best = INF;
            for p in 1..n_dirs {
                let g = fwd[(t << k) | p as usize];
                if g < INF {
                    best = best.min(g + sc.step(p, d, &head, false, mode));
                }
            }
            fwd[(v << k) | d as usize] = best;
        }
    }

    let corner = n_v - 1;
    let target_head: Vec<i32> = sc.lens.iter().map(|&n| n + 1).collect();
    for v in (0..n_v).rev() {
        fill(&mut head, v, &radix, &sc.lens);
        for d in 1..n_dirs {
            let slot = (v << k) | d as usize;
            if fwd[slot] >= INF {
                continue;
            }
            if v == corner {
                bwd[slot] = sc.step(d, all, &target_head, true, mode);
                continue;
            }
            let mut best = INF;
            let mut next = vec![0i32; k];
            for e in 1..n_dirs {
                let mut ok = true;
                for i in 0..k {
                    next[i] = head[i] + i32::from(sc.flag(e, i));
                    ok &= next[i] <= sc.lens[i];
                }
                if !ok {
                    continue;
                }
                let b = bwd[(index_of(&next, &radix) << k) | e as usize];
                if b < INF {
                    best = best.min(sc.step(d, e, &next, false, mode) + b);
                }
            }
            bwd[slot] = best;
        }
    }

    let mut g_star = INF;
    for d in 1..n_dirs {
        let f = fwd[(corner << k) | d as usize];
        if f < INF {
            g_star = g_star.min(f + sc.step(d, all, &target_head, true, mode));
        }
    }
    debug_assert_eq!(g_star, bwd[all as usize]);

    // Walk back through tight predecessors.
    let mut cols = Vec::new();
    let mut cur_v = corner;
    let mut cur_d = (1..n_dirs)
        .find(|&d| {
            let f = fwd[(corner << k) | d as usize];
            f < INF && f + sc.step(d, all, &target_head, true, mode) == g_star
        })
        .ok_or_else(|| Error::Reconstruction("no tight final edge".into()))?;
    while !(cur_v == 0 && cur_d == all) {
        cols.push(Direction(cur_d));
        fill(&mut head, cur_v, &radix, &sc.lens);
        for i in 0..k {
            tail[i] = head[i] - i32::from(sc.flag(cur_d, i));
        }
        let t = index_of(&tail, &radix);
        let here = fwd[(cur_v << k) | cur_d as usize];
        let p = (1..n_dirs)
            .find(|&p| {
                let g = fwd[(t << k) | p as usize];
                g < INF && g + sc.step(p, cur_d, &head, false, mode) == here
            })
            .ok_or_else(|| Error::Reconstruction("no tight predecessor".into()))?;
        cur_v = t;
        cur_d = p;
    }
    cols.reverse();

    let table = DenseTable {
        k,
        lens: sc.lens.clone(),
        radix,
        mode,
        fwd,
        bwd,
        g_star,
    };
    Ok((g_star, table, Alignment::new(k, cols)))
}

/// [`full_dp_with`] under half-gap charging, the convention the searches use
/// for distances. The optimal cost is the same under both conventions.
pub fn full_dp<S: Cost>(problem: &Problem<S>) -> Result<(i64, DenseTable, Alignment)> {
    full_dp_with(problem, GapCharging::Half)
}

fn fill(head: &mut [i32], v: usize, radix: &[usize], lens: &[i32]) {
    let h = decode(v, radix, lens);
    head.copy_from_slice(&h);
}

fn index_of(head: &[i32], radix: &[usize]) -> usize {
    head.iter().zip(radix).map(|(&h, &r)| h as usize * r).sum()
}

/// Every complete alignment whose full-charging cost is at most `max_cost`
/// (scaled units), with that cost.
pub fn enumerate_paths<S: Cost>(
    problem: &Problem<S>,
    max_cost: i64,
    path_cap: usize,
) -> Result<Vec<(i64, Alignment)>> {
    let sc = Scorer::new(problem);
    let mut out = Vec::new();
    let mut cols = Vec::new();
    let mut head = vec![0i32; sc.k];
    let all = (1u32 << sc.k) - 1;
    let mut paths = 0usize;
    dfs(
        &sc, &mut head, all, 0, max_cost, &mut cols, &mut out, &mut paths, path_cap,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    sc: &Scorer,
    head: &mut Vec<i32>,
    prev: u32,
    cost: i64,
    max_cost: i64,
    cols: &mut Vec<Direction>,
    out: &mut Vec<(i64, Alignment)>,
    paths: &mut usize,
    cap: usize,
) -> Result<()> {
    let k = sc.k;
    let all = (1u32 << k) - 1;
    if head.iter().zip(&sc.lens).all(|(&h, &n)| h == n) {
        *paths += 1;
        if *paths > cap {
            return Err(Error::TooManyPaths(cap));
        }
        let target: Vec<i32> = sc.lens.iter().map(|&n| n + 1).collect();
        let total = cost + sc.step(prev, all, &target, true, GapCharging::Full);
        if total <= max_cost {
            out.push((total, Alignment::new(k, cols.clone())));
        }
        return Ok(());
    }
    for d in 1..=all {
        if (0..k).any(|i| sc.flag(d, i) && head[i] == sc.lens[i]) {
            continue;
        }
        for i in 0..k {
            head[i] += i32::from(sc.flag(d, i));
        }
        // extension costs are non-negative, so a partial cost over budget
        // can be cut
        let c = cost + sc.step(prev, d, head, false, GapCharging::Full);
        if c <= max_cost {
            cols.push(Direction(d));
            dfs(sc, head, d, c, max_cost, cols, out, paths, cap)?;
            cols.pop();
        }
        for i in 0..k {
            head[i] -= i32::from(sc.flag(d, i));
        }
    }
    Ok(())
}

/// Sum-of-pairs cost of an alignment (scaled units, full gap charging),
/// evaluated pair by pair over the columns.
///
/// Columns where both rows of a pair are gaps cost nothing, but a gap that
/// resumes after such a column is charged a fresh opening.
pub fn sp_cost<S: Cost>(problem: &Problem<S>, alignment: &Alignment) -> i64 {
    let sc = Scorer::new(problem);
    let k = sc.k;
    let seqs: Vec<&[u8]> = sc.seqs.iter().map(|s| s.as_slice()).collect();
    let rows = alignment.rows(&seqs);
    let charged = |g: usize, pos: i32| sc.ends == EndGapMode::Charged || !sc.at_end(g, pos);
    let mut total = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            let mut pos = [0i32, 0i32];
            let mut prev = (true, true);
            for c in 0..alignment.len() {
                let (a, b) = (rows[i][c], rows[j][c]);
                pos[0] += i32::from(a.is_some());
                pos[1] += i32::from(b.is_some());
                let cur = (a.is_some(), b.is_some());
                match (a, b) {
                    (Some(x), Some(y)) => total += sc.sub[x as usize * sc.n_sym + y as usize],
                    (Some(_), None) | (None, Some(_)) => {
                        let (g, gp) = if a.is_none() {
                            (i, pos[0])
                        } else {
                            (j, pos[1])
                        };
                        if !(sc.ends == EndGapMode::AllFree && sc.at_end(g, gp)) {
                            total += sc.ext;
                        }
                        if prev != cur && charged(g, gp) {
                            total += sc.open;
                        }
                    }
                    (None, None) => {}
                }
                prev = cur;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqio::{build_cost_model, Alphabet, RawMatrix, Sequence};

    fn problem(seqs: &[&str], open: i64, ext: i64, mode: EndGapMode) -> Problem<i64> {
        let m = RawMatrix::unit(b"AB").unwrap();
        let cm = build_cost_model(&m, open, ext, mode).unwrap();
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
    fn identical_sequences_cost_zero() {
        let p = problem(&["ABBA", "ABBA", "ABBA"], 1, 1, EndGapMode::Charged);
        let (g, _, aln) = full_dp(&p).unwrap();
        assert_eq!(g, 0);
        assert_eq!(aln.len(), 4);
    }

    #[test]
    fn ab_vs_ba() {
        let p = problem(&["AB", "BA"], 1, 1, EndGapMode::Charged);
        let (g, _, aln) = full_dp(&p).unwrap();
        assert_eq!(g, 4);
        let paths = enumerate_paths(&p, 1000, 1_000_000).unwrap();
        assert_eq!(paths.iter().map(|(c, _)| *c).min(), Some(4));
        assert_eq!(sp_cost(&p, &aln), 4);
    }

    #[test]
    fn forward_backward_agree_and_modes_match() {
        let p = problem(&["ABAB", "BBA", "AAB"], 2, 1, EndGapMode::OpenFree);
        let (gh, th, _) = full_dp_with(&p, GapCharging::Half).unwrap();
        let (gf, tf, _) = full_dp_with(&p, GapCharging::Full).unwrap();
        assert_eq!(gh, gf);
        let all = Direction::all(3);
        assert_eq!(th.to_target(&[0, 0, 0], all), Some(gh));
        assert_eq!(tf.to_target(&[0, 0, 0], all), Some(gf));
    }

    #[test]
    fn enumerated_minimum_is_optimum() {
        for mode in [
            EndGapMode::Charged,
            EndGapMode::OpenFree,
            EndGapMode::AllFree,
        ] {
            let p = problem(&["ABA", "BB", "A"], 2, 1, mode);
            let (g, _, aln) = full_dp(&p).unwrap();
            let paths = enumerate_paths(&p, i64::MAX / 8, 10_000_000).unwrap();
            assert_eq!(paths.iter().map(|(c, _)| *c).min(), Some(g));
            for (c, a) in &paths {
                assert_eq!(*c, sp_cost(&p, a));
            }
            assert_eq!(sp_cost(&p, &aln), g);
        }
    }

    #[test]
    fn oversize_refused() {
        let s = "A".repeat(300);
        let p = problem(&[&s, &s, &s], 1, 1, EndGapMode::Charged);
        assert!(matches!(full_dp(&p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn path_cap_guard() {
        let p = problem(&["ABAB", "BABA"], 1, 1, EndGapMode::Charged);
        assert!(matches!(
            enumerate_paths(&p, i64::MAX / 8, 10),
            Err(Error::TooManyPaths(10))
        ));
    }
}
