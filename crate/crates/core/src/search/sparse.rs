//! Thinning of the closed list under a memory cap, and path recovery
//! through the gaps this leaves in backtrack chains.
//!
//! Levels are grouped into bands of `k`. At exponent `s` only bands whose
//! index is a multiple of `2^s` are kept; a closed edge in any other band is
//! bypassed by pointing its children past it. No lattice edge spans more
//! than `k` levels, so no path can jump a kept band.

use crate::error::{Error, Result};
use crate::heuristics::Heuristic;
use crate::lattice::{Alignment, EdgeKey, Problem};
use crate::scalar::Cost;

use super::iddp::{Engine, IterEnd, Store, NIL};
use super::MemoryBudget;

/// Whether a record at head level `level` may be bypassed at exponent `s`.
pub fn prunable(level: i64, k: usize, s: u32) -> bool {
    let band = level / k as i64;
    band % (1i64 << s) != 0
}

/// Per-exponent queues of open edges whose chains still need a walk.
#[derive(Debug)]
pub(crate) struct SparseState {
    k: usize,
    max_exp: u32,
    pending: Vec<Vec<(u32, EdgeKey)>>,
}

impl SparseState {
    pub fn new(n_max: i32, k: usize) -> Self {
        let max_exp = if n_max >= 2 {
            31 - (n_max as u32).leading_zeros()
        } else {
            0
        };
        Self {
            k,
            max_exp,
            pending: vec![Vec::new(); max_exp as usize + 2],
        }
    }

    pub fn reset(&mut self) {
        for p in &mut self.pending {
            p.clear();
        }
    }

    pub fn enqueue(&mut self, idx: u32, key: EdgeKey) {
        if self.max_exp >= 1 {
            self.pending[1].push((idx, key));
        }
    }
}

/// Walk the chain above open record `e` at exponent `s`, bypassing every
/// ancestor in a prunable band and marking the ones kept. The walk stops at
/// a record already walked at `s` or above.
fn walk<S: Cost>(store: &mut Store<S>, e: u32, s: u32, k: usize) {
    let s8 = s as u8;
    {
        let r = store.rec_mut(e);
        if r.last_sparse >= s8 {
            return;
        }
        r.last_sparse = s8;
        r.walks = r.walks.saturating_add(1);
    }
    let mut cur = e;
    loop {
        let pred = store.rec(cur).backtrack;
        if pred == NIL {
            return;
        }
        let p = store.rec(pred);
        if p.last_sparse >= s8 {
            return;
        }
        if prunable(i64::from(p.level), k, s) {
            let pp = p.backtrack;
            debug_assert!(pp != NIL, "band 0 is never pruned");
            store.relink(cur, pp);
            continue;
        }
        let p = store.rec_mut(pred);
        p.last_sparse = s8;
        p.walks = p.walks.saturating_add(1);
        cur = pred;
    }
}

/// Bypass closed records in prunable bands, raising the exponent until
/// usage fits the budget. Returns the exponent reached.
pub(crate) fn sparsify_closed<S: Cost>(
    store: &mut Store<S>,
    state: &mut SparseState,
    budget: MemoryBudget,
    entries: usize,
) -> Result<u32> {
    for s in 1..=state.max_exp {
        let pending = std::mem::take(&mut state.pending[s as usize]);
        for (idx, key) in pending {
            let r = store.rec(idx);
            if !r.alive || r.key != key || !r.in_open {
                continue;
            }
            walk(store, idx, s, state.k);
            if s < state.max_exp {
                state.pending[s as usize + 1].push((idx, key));
            }
        }
        if !budget.exceeded(MemoryBudget::used(store.live, entries)) {
            return Ok(s);
        }
    }
    Err(Error::MemoryBudget(format!(
        "{} live records still exceed the cap of {} units at the largest pruning exponent {}",
        store.live,
        budget.cap.unwrap_or(0),
        state.max_exp
    )))
}

/// Rebuild the full path from a backtrack chain (`target` first), filling
/// each gap between a record and a non-adjacent ancestor with a bounded
/// search from the ancestor that stops at the first path of the known
/// segment cost. Returns the alignment and the number of such searches.
pub(crate) fn trace_back<S: Cost, H: Heuristic<S>>(
    problem: &Problem<S>,
    h: &mut H,
    chain: &[(EdgeKey, S)],
    optimum: S,
) -> Result<(Alignment, u32)> {
    let codec = problem.codec();
    let k = problem.k();
    let mut head = vec![0i32; k];
    let mut ahead = vec![0i32; k];
    let mut rev: Vec<EdgeKey> = Vec::with_capacity(chain.len());
    let mut relays = 0;
    rev.push(chain[0].0);
    for w in chain.windows(2) {
        let ((c, gc), (a, ga)) = (w[0], w[1]);
        let d = codec.unpack(c, &mut head);
        codec.unpack(a, &mut ahead);
        let direct = (0..k).all(|i| ahead[i] == head[i] - d.get(i, k));
        if !direct {
            relays += 1;
            let mut engine = Engine::new(problem, &mut *h, MemoryBudget::unlimited());
            engine.limit = Some(head.clone());
            let (end, _) = engine.run_iteration(a, ga, c, optimum, &mut ())?;
            let IterEnd::Found(idx) = end else {
                return Err(Error::Reconstruction(format!(
                    "no path from relay {a:?} to {c:?}"
                )));
            };
            if engine.store.rec(idx).g != gc {
                return Err(Error::Reconstruction(format!(
                    "segment to {c:?} costs {} instead of {}",
                    engine.store.rec(idx).g.as_i64(),
                    gc.as_i64()
                )));
            }
            let mut j = engine.store.rec(idx).backtrack;
            while j != NIL && engine.store.rec(j).key != a {
                rev.push(engine.store.rec(j).key);
                j = engine.store.rec(j).backtrack;
            }
            if j == NIL {
                return Err(Error::Reconstruction("relay search lost its start".into()));
            }
        }
        rev.push(a);
    }
    h.reset_counters();
    rev.reverse();
    Ok((Alignment::from_edges(codec, &rev, problem.lens()), relays))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_rule() {
        // k = 3, s = 1: bands 1, 3, 5, ... are prunable
        let pruned: Vec<i64> = (0..15).filter(|&l| prunable(l, 3, 1)).collect();
        assert_eq!(pruned, vec![3, 4, 5, 9, 10, 11]);
        // s = 2 keeps only bands 0, 4, 8, ...
        assert!(prunable(6, 3, 2));
        assert!(!prunable(12, 3, 2));
        assert!(!prunable(0, 3, 5));
    }

    #[test]
    fn exponent_range() {
        assert_eq!(SparseState::new(1, 2).max_exp, 0);
        assert_eq!(SparseState::new(12, 2).max_exp, 3);
        assert_eq!(SparseState::new(16, 2).max_exp, 4);
    }
}
