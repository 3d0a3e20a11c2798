//! Iterative-deepening dynamic programming.
//!
//! Each iteration is a dynamic-programming sweep over the lattice in
//! (level, edge key) order that ignores edges with f above the current
//! threshold. Only edges still needed for some open edge's backtrack chain
//! are kept: an expanded edge without children is freed at once, and so is
//! any ancestor that loses its last child.

use std::time::Instant;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::heuristics::Heuristic;
use crate::lattice::{Direction, EdgeKey, GapCharging, KeyCodec, Problem};
use crate::scalar::Cost;

use super::schedule::ThresholdSchedule;
use super::sparse::{self, SparseState};
use super::{MemoryBudget, SearchStats, Solution};

pub(crate) const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub(crate) struct Record<S> {
    pub key: EdgeKey,
    pub g: S,
    pub backtrack: u32,
    pub refcount: u32,
    pub level: i32,
    pub last_sparse: u8,
    pub walks: u8,
    pub in_open: bool,
    pub alive: bool,
}

/// Arena of search records with a key index.
#[derive(Debug, Default)]
pub(crate) struct Store<S> {
    pub recs: Vec<Record<S>>,
    free: Vec<u32>,
    pub index: FxHashMap<EdgeKey, u32>,
    pub live: usize,
    pub open: usize,
}

impl<S: Cost> Store<S> {
    fn new() -> Self {
        Self {
            recs: Vec::new(),
            free: Vec::new(),
            index: FxHashMap::default(),
            live: 0,
            open: 0,
        }
    }

    fn clear(&mut self) {
        self.recs.clear();
        self.free.clear();
        self.index.clear();
        self.live = 0;
        self.open = 0;
    }

    fn alloc(&mut self, key: EdgeKey, g: S, level: i32) -> u32 {
        let rec = Record {
            key,
            g,
            backtrack: NIL,
            refcount: 0,
            level,
            last_sparse: 0,
            walks: 0,
            in_open: false,
            alive: true,
        };
        let idx = match self.free.pop() {
            Some(i) => {
                self.recs[i as usize] = rec;
                i
            }
            None => {
                self.recs.push(rec);
                (self.recs.len() - 1) as u32
            }
        };
        self.index.insert(key, idx);
        self.live += 1;
        idx
    }

    #[inline]
    pub fn rec(&self, i: u32) -> &Record<S> {
        &self.recs[i as usize]
    }

    #[inline]
    pub fn rec_mut(&mut self, i: u32) -> &mut Record<S> {
        &mut self.recs[i as usize]
    }

    fn release(&mut self, i: u32) {
        let key = self.recs[i as usize].key;
        self.index.remove(&key);
        let r = &mut self.recs[i as usize];
        r.alive = false;
        r.backtrack = NIL;
        self.free.push(i);
        self.live -= 1;
    }

    /// Free `i` (closed, no children) and every ancestor that thereby loses
    /// its last child.
    pub fn delete_rec(&mut self, mut i: u32) {
        loop {
            debug_assert!(self.rec(i).refcount == 0 && !self.rec(i).in_open);
            let parent = self.rec(i).backtrack;
            self.release(i);
            if parent == NIL {
                return;
            }
            let p = self.rec_mut(parent);
            p.refcount -= 1;
            if p.refcount > 0 || p.in_open {
                return;
            }
            i = parent;
        }
    }

    /// Point `child`'s backtrack at `parent`, fixing reference counts and
    /// freeing the former parent if it lost its last child.
    pub fn relink(&mut self, child: u32, parent: u32) {
        self.rec_mut(parent).refcount += 1;
        let old = self.rec(child).backtrack;
        self.rec_mut(child).backtrack = parent;
        if old != NIL {
            let o = self.rec_mut(old);
            o.refcount -= 1;
            if o.refcount == 0 && !o.in_open {
                self.delete_rec(old);
            }
        }
    }
}

/// Level-indexed buckets; a bucket is sorted by edge key when the cursor
/// reaches it. Pushes always go to levels above the cursor.
#[derive(Debug, Default)]
pub(crate) struct LevelQueue {
    buckets: Vec<Vec<(EdgeKey, u32)>>,
    cursor: usize,
    sorted: bool,
    len: usize,
}

impl LevelQueue {
    fn reset(&mut self, levels: usize) {
        for b in &mut self.buckets {
            b.clear();
        }
        if self.buckets.len() < levels {
            self.buckets.resize_with(levels, Vec::new);
        }
        self.cursor = 0;
        self.sorted = false;
        self.len = 0;
    }

    fn push(&mut self, level: i32, key: EdgeKey, idx: u32) {
        let l = level as usize;
        debug_assert!(l > self.cursor || (l == self.cursor && !self.sorted));
        self.buckets[l].push((key, idx));
        self.len += 1;
    }

    fn pop(&mut self) -> Option<(EdgeKey, u32)> {
        if self.len == 0 {
            return None;
        }
        loop {
            let b = &mut self.buckets[self.cursor];
            if !self.sorted {
                b.sort_unstable_by_key(|x| std::cmp::Reverse(x.0));
                self.sorted = true;
            }
            if let Some(x) = b.pop() {
                self.len -= 1;
                return Some(x);
            }
            self.cursor += 1;
            self.sorted = false;
        }
    }

    fn span(&self) -> Option<(i64, i64)> {
        if self.len == 0 {
            return None;
        }
        let lo = (self.cursor..self.buckets.len()).find(|&l| !self.buckets[l].is_empty())?;
        let hi = (lo..self.buckets.len())
            .rev()
            .find(|&l| !self.buckets[l].is_empty())?;
        Some((lo as i64, hi as i64))
    }
}

/// Read-only view of the search state for observers.
pub struct IddpView<'a, S> {
    store: &'a Store<S>,
    queue: &'a LevelQueue,
}

impl<S: Cost> IddpView<'_, S> {
    /// Lowest and highest head level among open edges.
    pub fn open_level_span(&self) -> Option<(i64, i64)> {
        self.queue.span()
    }

    pub fn live_records(&self) -> usize {
        self.store.live
    }

    pub fn open_records(&self) -> usize {
        self.store.open
    }

    /// `(key, g, backtrack key, in_open)` of every live record.
    pub fn records(&self) -> Vec<(EdgeKey, S, Option<EdgeKey>, bool)> {
        self.store
            .recs
            .iter()
            .filter(|r| r.alive)
            .map(|r| {
                let bt = (r.backtrack != NIL).then(|| self.store.rec(r.backtrack).key);
                (r.key, r.g, bt, r.in_open)
            })
            .collect()
    }

    /// Recount children of every record from scratch and compare.
    pub fn audit_refcounts(&self) -> std::result::Result<(), String> {
        let mut counts = vec![0u32; self.store.recs.len()];
        for r in self.store.recs.iter().filter(|r| r.alive) {
            if r.backtrack != NIL {
                if !self.store.rec(r.backtrack).alive {
                    return Err(format!("{:?} points at a freed record", r.key));
                }
                counts[r.backtrack as usize] += 1;
            }
        }
        for (i, r) in self.store.recs.iter().enumerate().filter(|(_, r)| r.alive) {
            if r.refcount != counts[i] {
                return Err(format!(
                    "{:?}: refcount {} but {} children",
                    r.key, r.refcount, counts[i]
                ));
            }
            if r.refcount == 0 && !r.in_open {
                return Err(format!("{:?}: closed record without children", r.key));
            }
        }
        Ok(())
    }

    /// Every live record must lie on the backtrack chain of an open record.
    pub fn audit_reachability(&self) -> std::result::Result<(), String> {
        let mut seen = vec![false; self.store.recs.len()];
        for (i, r) in self.store.recs.iter().enumerate() {
            if r.alive && r.in_open {
                let mut j = i as u32;
                while j != NIL && !seen[j as usize] {
                    seen[j as usize] = true;
                    j = self.store.rec(j).backtrack;
                }
            }
        }
        match self
            .store
            .recs
            .iter()
            .enumerate()
            .find(|(i, r)| r.alive && !seen[*i])
        {
            Some((_, r)) => Err(format!("{:?} is not reachable from any open edge", r.key)),
            None => Ok(()),
        }
    }

    /// Levels crossed by backtrack hops that skip over intermediate edges:
    /// `(ancestor level, child level)` for each hop whose ancestor is not the
    /// child's direct predecessor.
    pub fn relay_hops(&self, codec: &KeyCodec) -> Vec<(i64, i64)> {
        let k = codec.k();
        let mut head = vec![0; k];
        let mut out = Vec::new();
        for r in self
            .store
            .recs
            .iter()
            .filter(|r| r.alive && r.backtrack != NIL)
        {
            let p = self.store.rec(r.backtrack);
            let d = codec.unpack(r.key, &mut head);
            let tail_level: i64 =
                head.iter().map(|&h| i64::from(h)).sum::<i64>() - i64::from(d.popcount());
            if i64::from(p.level) != tail_level {
                out.push((i64::from(p.level), i64::from(r.level)));
            }
        }
        out
    }

    /// Largest number of chain walks that stepped onto one record.
    pub fn max_walks(&self) -> u32 {
        self.store
            .recs
            .iter()
            .filter(|r| r.alive)
            .map(|r| u32::from(r.walks))
            .max()
            .unwrap_or(0)
    }
}

/// Hooks into an IDDP run, for tests and instrumentation.
pub trait Observer<S: Cost> {
    fn iteration_start(&mut self, _thresh: S) {}
    /// Called after `key` has been expanded (and possibly freed).
    fn expanded(&mut self, _key: EdgeKey, _g: S, _view: &IddpView<'_, S>) {}
    fn iteration_end(&mut self, _thresh: S, _min_next: Option<S>, _expansions: u64) {}
    /// Called after a sparsification pass that reached `exponent`.
    fn sparsified(&mut self, _exponent: u32, _view: &IddpView<'_, S>) {}
}

impl<S: Cost> Observer<S> for () {}

/// IDDP parameters. Thresholds are scaled costs.
#[derive(Debug, Clone, Copy)]
pub struct IddpOptions<S> {
    /// First threshold; defaults to h(start).
    pub lower: Option<S>,
    /// No solution is sought above this; must be at least the optimum.
    pub upper: S,
    pub memory: MemoryBudget,
}

impl<S: Cost> IddpOptions<S> {
    pub fn with_upper(upper: S) -> Self {
        Self {
            lower: None,
            upper,
            memory: MemoryBudget::unlimited(),
        }
    }
}

pub(crate) enum IterEnd<S> {
    Found(u32),
    Exhausted { min_next: Option<S> },
}

/// One bounded sweep's worth of machinery, shared by the main search and
/// the reconstruction searches.
pub(crate) struct Engine<'a, S: Cost, H> {
    pub problem: &'a Problem<S>,
    pub h: H,
    pub store: Store<S>,
    queue: LevelQueue,
    pub sparse: Option<SparseState>,
    pub budget: MemoryBudget,
    pub entries: usize,
    /// Successors with a head coordinate above this are ignored.
    pub limit: Option<Vec<i32>>,
    pub stats: SearchStats,
    head: Vec<i32>,
    next: Vec<i32>,
    dirs: Vec<Direction>,
    hs: Vec<Option<S>>,
}

impl<'a, S: Cost, H: Heuristic<S>> Engine<'a, S, H> {
    pub fn new(problem: &'a Problem<S>, h: H, budget: MemoryBudget) -> Self {
        let k = problem.k();
        let sparse = budget.cap.map(|_| SparseState::new(problem.max_len(), k));
        Self {
            problem,
            h,
            store: Store::new(),
            queue: LevelQueue::default(),
            sparse,
            budget,
            entries: 0,
            limit: None,
            stats: SearchStats::default(),
            head: vec![0; k],
            next: vec![0; k],
            dirs: Vec::with_capacity(1 << k),
            hs: Vec::with_capacity(1 << k),
        }
    }

    fn view(&self) -> IddpView<'_, S> {
        IddpView {
            store: &self.store,
            queue: &self.queue,
        }
    }

    fn open_edge(&mut self, idx: u32) {
        let r = self.store.rec_mut(idx);
        r.in_open = true;
        let (level, key) = (r.level, r.key);
        self.store.open += 1;
        self.queue.push(level, key, idx);
        if let Some(sp) = &mut self.sparse {
            sp.enqueue(idx, key);
        }
    }

    /// Run one sweep from `start` (with distance `start_g` and, for the main
    /// search, the all-ones direction) until `target` is taken from the
    /// queue or the queue runs dry.
    pub fn run_iteration<O: Observer<S>>(
        &mut self,
        start: EdgeKey,
        start_g: S,
        target: EdgeKey,
        thresh: S,
        obs: &mut O,
    ) -> Result<(IterEnd<S>, u64)> {
        let codec = self.problem.codec();
        let k = self.problem.k();
        self.store.clear();
        self.queue.reset(self.problem.target_level() as usize + 1);
        if let Some(sp) = &mut self.sparse {
            sp.reset();
        }
        let level = codec.level(start) as i32;
        let s = self.store.alloc(start, start_g, level);
        self.open_edge(s);
        let mut min_next: Option<S> = None;
        let mut expansions = 0u64;

        while let Some((key, idx)) = self.queue.pop() {
            {
                let r = self.store.rec_mut(idx);
                debug_assert!(r.alive && r.key == key && r.in_open);
                r.in_open = false;
            }
            self.store.open -= 1;
            if key == target {
                return Ok((IterEnd::Found(idx), expansions));
            }
            expansions += 1;
            let g = self.store.rec(idx).g;
            let dir = codec.unpack(key, &mut self.head);
            self.dirs.clear();
            let dirs = &mut self.dirs;
            self.problem
                .for_each_successor_dir(&self.head, |d| dirs.push(d));
            if let Some(limit) = &self.limit {
                let head = &self.head;
                self.dirs
                    .retain(|d| (0..k).all(|i| head[i] + d.get(i, k) <= limit[i]));
            }
            self.h
                .successor_estimates(&self.head, &self.dirs, &mut self.hs);
            for n in 0..self.dirs.len() {
                let Some(hv) = self.hs[n] else { continue };
                let d = self.dirs[n];
                for i in 0..k {
                    self.next[i] = self.head[i] + d.get(i, k);
                }
                let ng = g + self
                    .problem
                    .transition_cost(dir, d, &self.next, GapCharging::Half);
                let nf = ng + hv;
                if nf > thresh {
                    min_next = Some(min_next.map_or(nf, |m: S| m.min(nf)));
                    continue;
                }
                let child_key = codec.pack(&self.next, d);
                match self.store.index.get(&child_key).copied() {
                    Some(c) => {
                        if ng < self.store.rec(c).g {
                            self.store.rec_mut(c).g = ng;
                            self.store.relink(c, idx);
                        }
                    }
                    None => {
                        let lvl: i32 = self.next.iter().sum();
                        let c = self.store.alloc(child_key, ng, lvl);
                        self.store.relink(c, idx);
                        self.open_edge(c);
                    }
                }
            }
            if self.store.rec(idx).refcount == 0 {
                self.store.delete_rec(idx);
            }
            self.stats
                .note_memory(self.store.live, self.store.open, self.entries);
            obs.expanded(key, g, &self.view());
            if self
                .budget
                .exceeded(MemoryBudget::used(self.store.live, self.entries))
            {
                let reached = match &mut self.sparse {
                    Some(sp) => {
                        sparse::sparsify_closed(&mut self.store, sp, self.budget, self.entries)?
                    }
                    None => unreachable!("a capped budget always carries sparse state"),
                };
                self.stats.max_sparse = self.stats.max_sparse.max(reached);
                obs.sparsified(reached, &self.view());
            }
        }
        Ok((IterEnd::Exhausted { min_next }, expansions))
    }
}

/// IDDP without instrumentation.
pub fn iddp<S: Cost, H: Heuristic<S>>(
    problem: &Problem<S>,
    h: &mut H,
    opts: &IddpOptions<S>,
) -> Result<Solution<S>> {
    iddp_observed(problem, h, opts, &mut ())
}

/// Repeated bounded sweeps with thresholds from `lower` up to `upper`.
/// Between sweeps the threshold grows by the schedule's increment, and at
/// least to the smallest f that was cut off.
pub fn iddp_observed<S: Cost, H: Heuristic<S>, O: Observer<S>>(
    problem: &Problem<S>,
    h: &mut H,
    opts: &IddpOptions<S>,
    obs: &mut O,
) -> Result<Solution<S>> {
    let clock = Instant::now();
    let k = problem.k();
    let start = problem.start_edge();
    let target = problem.target_edge();
    let h_start = h
        .estimate(&vec![0; k], Direction::all(k))
        .unwrap_or_else(S::zero);
    h.reset_counters();
    let mut thresh = opts.lower.unwrap_or(h_start).min(opts.upper);
    let mut rebuilds = 0u32;
    if h.ensure_sound(thresh)? {
        rebuilds += 1;
    }
    let mut schedule = ThresholdSchedule::new();
    let mut engine = Engine::new(problem, &mut *h, opts.memory);

    loop {
        engine.entries = engine.h.entries();
        obs.iteration_start(thresh);
        let (end, n) = engine.run_iteration(start, S::zero(), target, thresh, obs)?;
        engine.stats.expansions += n;
        engine.stats.iterations += 1;
        let (hits, misses) = engine.h.hits_misses();
        engine.stats.heu_hits += hits;
        engine.stats.heu_misses += misses;
        match end {
            IterEnd::Found(idx) => {
                obs.iteration_end(thresh, None, n);
                engine.h.reset_counters();
                let cost = engine.store.rec(idx).g;
                let mut chain = Vec::new();
                let mut j = idx;
                while j != NIL {
                    let r = engine.store.rec(j);
                    chain.push((r.key, r.g));
                    j = r.backtrack;
                }
                let mut stats = std::mem::take(&mut engine.stats);
                stats.expansions_last_iter = n;
                stats.heu_entries = engine.h.entries();
                stats.max_walks = engine
                    .store
                    .recs
                    .iter()
                    .map(|r| u32::from(r.walks))
                    .max()
                    .unwrap_or(0);
                drop(engine);
                let (alignment, relays) = sparse::trace_back(problem, h, &chain, cost)?;
                stats.relay_searches = relays;
                stats.algorithm = "iddp".into();
                stats.table_rebuilds = rebuilds;
                stats.time = clock.elapsed();
                return Ok(Solution {
                    cost,
                    alignment,
                    stats,
                });
            }
            IterEnd::Exhausted { min_next } => {
                obs.iteration_end(thresh, min_next, n);
                schedule.record(thresh.as_i64(), n);
                if thresh >= opts.upper {
                    return Err(Error::NoSolution {
                        upper: opts.upper.as_i64() / crate::seqio::SCALE,
                    });
                }
                let mut next = thresh + S::of(schedule.increment(h_start.as_i64()));
                if let Some(m) = min_next {
                    next = next.max(m);
                }
                next = next.min(opts.upper);
                let mut changed = engine.h.after_iteration()?;
                engine.h.reset_counters();
                changed |= engine.h.ensure_sound(next)?;
                if changed {
                    rebuilds += 1;
                    schedule.clear();
                }
                thresh = next;
            }
        }
    }
}
