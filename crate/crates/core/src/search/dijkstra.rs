//! Best-first searches with full expansion.

use std::time::Instant;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::heuristics::{Heuristic, ZeroHeuristic};
use crate::lattice::{Direction, EdgeKey, GapCharging, Problem};
use crate::scalar::Cost;

use super::queue::BucketQueue;
use super::{path_to_alignment, MemoryBudget, SearchOptions, SearchStats, Solution};

#[derive(Debug, Clone, Copy)]
struct Node<S> {
    g: S,
    h: S,
    parent: Option<EdgeKey>,
    closed: bool,
}

/// Dijkstra's algorithm: A* with h ≡ 0.
pub fn dijkstra<S: Cost>(problem: &Problem<S>, opts: &SearchOptions<S>) -> Result<Solution<S>> {
    let mut sol = best_first(problem, &mut ZeroHeuristic, opts)?;
    sol.stats.algorithm = "dijkstra".into();
    Ok(sol)
}

/// A* on f = g + h with node reopening. Edges the heuristic cannot score
/// are pruned, as are edges with f above `opts.upper`.
pub fn astar<S: Cost, H: Heuristic<S>>(
    problem: &Problem<S>,
    h: &mut H,
    opts: &SearchOptions<S>,
) -> Result<Solution<S>> {
    let mut sol = best_first(problem, h, opts)?;
    sol.stats.algorithm = "astar".into();
    Ok(sol)
}

fn best_first<S: Cost, H: Heuristic<S>>(
    problem: &Problem<S>,
    h: &mut H,
    opts: &SearchOptions<S>,
) -> Result<Solution<S>> {
    let clock = Instant::now();
    let k = problem.k();
    let codec = problem.codec();
    let start = problem.start_edge();
    let target = problem.target_edge();
    let entries = h.entries();
    let mut stats = SearchStats::default();

    let mut nodes: FxHashMap<EdgeKey, Node<S>> = FxHashMap::default();
    let mut queue: BucketQueue<EdgeKey> = BucketQueue::new();
    let h0 = h
        .estimate(&vec![0; k], Direction::all(k))
        .unwrap_or_else(S::zero);
    nodes.insert(
        start,
        Node {
            g: S::zero(),
            h: h0,
            parent: None,
            closed: false,
        },
    );
    queue.push(h0.as_i64(), start);
    let mut open = 1usize;

    let mut head = vec![0i32; k];
    let mut next = vec![0i32; k];
    let mut dirs: Vec<Direction> = Vec::with_capacity(1 << k);
    let mut hs: Vec<Option<S>> = Vec::with_capacity(1 << k);

    while let Some((f, e)) = queue.pop() {
        let node = nodes[&e];
        if node.closed || (node.g + node.h).as_i64() != f {
            continue;
        }
        nodes.get_mut(&e).unwrap().closed = true;
        open -= 1;
        if e == target {
            let mut path = vec![e];
            let mut cur = node.parent;
            while let Some(p) = cur {
                path.push(p);
                cur = nodes[&p].parent;
            }
            let (hits, misses) = h.hits_misses();
            stats.heu_hits += hits;
            stats.heu_misses += misses;
            stats.expansions_last_iter = stats.expansions;
            stats.iterations = 1;
            stats.heu_entries = h.entries();
            stats.time = clock.elapsed();
            return Ok(Solution {
                cost: node.g,
                alignment: path_to_alignment(codec, path, problem.lens()),
                stats,
            });
        }
        stats.expansions += 1;
        let dir = codec.unpack(e, &mut head);
        dirs.clear();
        problem.for_each_successor_dir(&head, |d| dirs.push(d));
        h.successor_estimates(&head, &dirs, &mut hs);
        for (&d, &hv) in dirs.iter().zip(hs.iter()) {
            let Some(hv) = hv else { continue };
            for i in 0..k {
                next[i] = head[i] + d.get(i, k);
            }
            let ng = node.g + problem.transition_cost(dir, d, &next, GapCharging::Half);
            if opts.upper.is_some_and(|u| ng + hv > u) {
                continue;
            }
            let child = codec.pack(&next, d);
            match nodes.get_mut(&child) {
                Some(c) if c.g <= ng => continue,
                Some(c) => {
                    if c.closed {
                        open += 1;
                    }
                    *c = Node {
                        g: ng,
                        h: hv,
                        parent: Some(e),
                        closed: false,
                    };
                }
                None => {
                    nodes.insert(
                        child,
                        Node {
                            g: ng,
                            h: hv,
                            parent: Some(e),
                            closed: false,
                        },
                    );
                    open += 1;
                }
            }
            queue.push((ng + hv).as_i64(), child);
        }
        stats.note_memory(nodes.len(), open, entries);
        if opts
            .memory
            .exceeded(MemoryBudget::used(nodes.len(), entries))
        {
            return Err(Error::MemoryBudget(format!(
                "{} records after {} expansions exceed the cap of {} units",
                nodes.len(),
                stats.expansions,
                opts.memory.cap.unwrap_or(0)
            )));
        }
    }
    Err(Error::NoSolution {
        upper: opts.upper.map_or(-1, |u| u.as_i64() / crate::seqio::SCALE),
    })
}
