//! Partial-expansion A*.

use std::time::Instant;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::heuristics::Heuristic;
use crate::lattice::{Direction, EdgeKey, GapCharging, Problem};
use crate::scalar::Cost;

use super::queue::BucketQueue;
use super::{path_to_alignment, MemoryBudget, SearchOptions, SearchStats, Solution};

/// Which children a node with stored value `big_f` generates (those with
/// f ≤ F + C) and the node's next stored value (smallest f left over), or
/// `None` when nothing is left and the node closes.
pub fn partial_expansion_split<S: Cost>(child_fs: &[S], big_f: S, c: S) -> (Vec<usize>, Option<S>) {
    let limit = big_f + c;
    let mut generated = Vec::new();
    let mut rest: Option<S> = None;
    for (i, &f) in child_fs.iter().enumerate() {
        if f <= limit {
            generated.push(i);
        } else {
            rest = Some(rest.map_or(f, |r| r.min(f)));
        }
    }
    (generated, rest)
}

#[derive(Debug, Clone, Copy)]
struct Node<S> {
    g: S,
    big_f: S,
    parent: Option<EdgeKey>,
    closed: bool,
}

/// PEA*: a node is queued by its stored value F; expanding it generates the
/// children with f ≤ F + C and requeues it with the smallest remaining f.
/// Children are re-scanned on every partial expansion.
pub fn pea_star<S: Cost, H: Heuristic<S>>(
    problem: &Problem<S>,
    h: &mut H,
    c: S,
    opts: &SearchOptions<S>,
) -> Result<Solution<S>> {
    let clock = Instant::now();
    let k = problem.k();
    let codec = problem.codec();
    let start = problem.start_edge();
    let target = problem.target_edge();
    let entries = h.entries();
    let mut stats = SearchStats {
        algorithm: "pea".into(),
        ..Default::default()
    };

    let mut nodes: FxHashMap<EdgeKey, Node<S>> = FxHashMap::default();
    let mut queue: BucketQueue<EdgeKey> = BucketQueue::new();
    let h0 = h
        .estimate(&vec![0; k], Direction::all(k))
        .unwrap_or_else(S::zero);
    nodes.insert(
        start,
        Node {
            g: S::zero(),
            big_f: h0,
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
    let mut kids: Vec<(EdgeKey, S, S)> = Vec::with_capacity(1 << k);
    let mut fs: Vec<S> = Vec::with_capacity(1 << k);

    while let Some((prio, e)) = queue.pop() {
        let node = nodes[&e];
        if node.closed || node.big_f.as_i64() != prio {
            continue;
        }
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
        kids.clear();
        for (&d, &hv) in dirs.iter().zip(hs.iter()) {
            let Some(hv) = hv else { continue };
            for i in 0..k {
                next[i] = head[i] + d.get(i, k);
            }
            let ng = node.g + problem.transition_cost(dir, d, &next, GapCharging::Half);
            if opts.upper.is_some_and(|u| ng + hv > u) {
                continue;
            }
            kids.push((codec.pack(&next, d), ng, ng + hv));
        }
        fs.clear();
        fs.extend(kids.iter().map(|&(_, _, f)| f));
        let (generated, rest) = partial_expansion_split(&fs, node.big_f, c);
        for i in generated {
            let (child, ng, nf) = kids[i];
            match nodes.get_mut(&child) {
                Some(n) if n.g <= ng => continue,
                Some(n) => {
                    if n.closed {
                        open += 1;
                    }
                    *n = Node {
                        g: ng,
                        big_f: nf,
                        parent: Some(e),
                        closed: false,
                    };
                }
                None => {
                    nodes.insert(
                        child,
                        Node {
                            g: ng,
                            big_f: nf,
                            parent: Some(e),
                            closed: false,
                        },
                    );
                    open += 1;
                }
            }
            queue.push(nf.as_i64(), child);
        }
        let n = nodes.get_mut(&e).unwrap();
        match rest {
            Some(f) => {
                n.big_f = f;
                queue.push(f.as_i64(), e);
            }
            None => {
                n.closed = true;
                open -= 1;
            }
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
