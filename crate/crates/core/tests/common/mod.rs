//! Random instances shared by the integration tests.
#![allow(dead_code)]

use iddp::lattice::Problem;
use iddp::seqio::{build_cost_model, Alphabet, EndGapMode, RawMatrix, Sequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SYMBOLS: &[u8] = b"ACGT";

/// Symmetric matrix with zero diagonal and off-diagonal entries in
/// `[lo, 2lo]`, which keeps every triple of residues metric.
pub fn random_matrix(rng: &mut ChaCha8Rng) -> RawMatrix {
    let n = SYMBOLS.len();
    let lo = rng.gen_range(1..=5);
    let mut v = vec![0i64; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let x = rng.gen_range(lo..=2 * lo);
            v[a * n + b] = x;
            v[b * n + a] = x;
        }
    }
    RawMatrix::new(Alphabet::new(SYMBOLS).unwrap(), v).unwrap()
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub seqs: Vec<String>,
    pub matrix: RawMatrix,
    pub gap_open: i64,
    pub gap_extend: i64,
    pub mode: EndGapMode,
}

impl Instance {
    pub fn random(seed: u64, k: usize, max_len: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seqs = (0..k)
            .map(|_| {
                let n = rng.gen_range(1..=max_len);
                (0..n)
                    .map(|_| SYMBOLS[rng.gen_range(0..SYMBOLS.len())] as char)
                    .collect()
            })
            .collect();
        let matrix = random_matrix(&mut rng);
        let gap_open = rng.gen_range(0..=6);
        let gap_extend = rng.gen_range(1..=4);
        let mode = if seed.is_multiple_of(2) {
            EndGapMode::Charged
        } else {
            EndGapMode::OpenFree
        };
        Self {
            seed,
            seqs,
            matrix,
            gap_open,
            gap_extend,
            mode,
        }
    }

    pub fn problem(&self) -> Problem<i64> {
        problem_from(
            &self.seqs.iter().map(String::as_str).collect::<Vec<_>>(),
            &self.matrix,
            self.gap_open,
            self.gap_extend,
            self.mode,
        )
    }
}

pub fn problem_from(
    seqs: &[&str],
    matrix: &RawMatrix,
    gap_open: i64,
    gap_extend: i64,
    mode: EndGapMode,
) -> Problem<i64> {
    let cm = build_cost_model(matrix, gap_open, gap_extend, mode).unwrap();
    let seqs = seqs
        .iter()
        .enumerate()
        .map(|(i, s)| Sequence {
            id: format!("s{i}"),
            residues: s
                .bytes()
                .map(|c| matrix.alphabet.index_of(c).unwrap())
                .collect(),
        })
        .collect();
    Problem::new(seqs, cm).unwrap()
}

/// The suite: 200 instances cycling k through 2, 3, 4.
pub fn suite() -> Vec<Instance> {
    (0..200u64)
        .map(|s| Instance::random(s, 2 + (s % 3) as usize, 12))
        .collect()
}

use iddp::heuristics::{BuildLimit, Heuristic, HeuristicKind, TableHeuristic, TableSet};
use iddp::lattice::{Direction, GapCharging};
use iddp::oracle::DenseTable;

pub fn table_heuristic(
    p: &Problem<i64>,
    kind: HeuristicKind,
    delta_pair: i64,
    delta_m: i64,
) -> TableHeuristic<i64> {
    let kind = kind.resolve(p.k());
    let t = TableSet::build(p, kind, delta_pair, delta_m, BuildLimit(None)).unwrap();
    TableHeuristic::new(p, kind, t).unwrap()
}

/// Check h_pair, h_all,3 and h_one against exact goal distances at every
/// edge, h_pair consistency along every edge-successor pair, and h_all,3 ≥
/// h_pair wherever every triple table has the edge. Returns the violations.
pub fn heuristic_violations(
    p: &Problem<i64>,
    table: &DenseTable,
    delta_pair: i64,
    delta_m: i64,
) -> Vec<String> {
    let k = p.k();
    let codec = p.codec();
    let mut bad = Vec::new();
    let mut pair = table_heuristic(p, HeuristicKind::Pair, delta_pair, delta_m);
    let mut others: Vec<(HeuristicKind, TableHeuristic<i64>)> = vec![(
        HeuristicKind::One(0),
        table_heuristic(p, HeuristicKind::One(0), delta_pair, delta_m),
    )];
    if k >= 3 {
        others.push((
            HeuristicKind::All(3),
            table_heuristic(p, HeuristicKind::All(3), delta_pair, delta_m),
        ));
    }
    let mut next = vec![0; k];
    for (head, dir) in table.edges() {
        let exact = table.to_target(&head, dir).unwrap();
        let hp = pair.estimate(&head, dir);
        if let Some(v) = hp {
            if v > exact {
                bad.push(format!("h_pair {v} > {exact} at {head:?}/{dir:?}"));
            }
            for d in p.successor_dirs(&head) {
                for i in 0..k {
                    next[i] = head[i] + d.get(i, k);
                }
                if let Some(hn) = pair.estimate(&next, d) {
                    let c = p.transition_cost(dir, d, &next, GapCharging::Half);
                    if v > c + hn {
                        bad.push(format!(
                            "h_pair inconsistent at {head:?}/{dir:?} -> {d:?}: {v} > {c} + {hn}"
                        ));
                    }
                }
            }
        }
        for (kind, h) in others.iter_mut() {
            if let Some(v) = h.estimate(&head, dir) {
                if v > exact {
                    bad.push(format!("{kind} {v} > {exact} at {head:?}/{dir:?}"));
                }
                if *kind == HeuristicKind::All(3) {
                    let key = codec.pack(&head, dir);
                    let all_hit = h
                        .tables()
                        .subsets()
                        .iter()
                        .all(|t| t.lookup(codec, key).is_some());
                    if let (true, Some(hpv)) = (all_hit, hp) {
                        if v < hpv {
                            bad.push(format!("h_all3 {v} < h_pair {hpv} at {head:?}/{dir:?}"));
                        }
                    }
                }
            }
        }
    }
    let target: Vec<i32> = p.lens().iter().map(|&n| n + 1).collect();
    if pair.estimate(&target, Direction::all(k)) != Some(0) {
        bad.push("h_pair(target) != 0".into());
    }
    bad
}

use iddp::search::{iddp_observed, IddpOptions, IddpView, MemoryBudget, Observer, Solution};

/// Records sparsification checkpoints of a capped run.
#[derive(Debug, Default)]
pub struct SparseLog {
    pub cap: u64,
    pub entries: usize,
    pub max_exponent: u32,
    pub checkpoints: usize,
    /// Checkpoints at which usage was still above the cap.
    pub over_cap: usize,
    pub max_walks: u32,
}

impl Observer<i64> for SparseLog {
    fn sparsified(&mut self, exponent: u32, view: &IddpView<'_, i64>) {
        self.max_exponent = self.max_exponent.max(exponent);
        self.checkpoints += 1;
        if MemoryBudget::used(view.live_records(), self.entries) > self.cap {
            self.over_cap += 1;
        }
        self.max_walks = self.max_walks.max(view.max_walks());
    }
}

/// Rerun IDDP under shrinking caps until sparsification reaches exponent
/// 2 or more. Returns the cap, the capped solution and its log.
pub fn forced_sparse_run<H: Heuristic<i64> + Clone>(
    p: &Problem<i64>,
    h: &H,
    upper: i64,
) -> Option<(Solution<i64>, SparseLog)> {
    let entries = h.entries();
    let base = iddp::search::iddp(p, &mut h.clone(), &IddpOptions::with_upper(upper)).ok()?;
    let records = (base.stats.peak_mem_units - MemoryBudget::used(0, entries)) / 64;
    for div in [2u64, 3, 4, 5, 6, 8, 10, 12, 16, 20, 24, 32] {
        let cap = MemoryBudget::used(0, entries) + (records / div).max(2) * 64;
        let opts = IddpOptions {
            lower: None,
            upper,
            memory: MemoryBudget::capped(cap),
        };
        let mut log = SparseLog {
            cap,
            entries,
            ..Default::default()
        };
        match iddp_observed(p, &mut h.clone(), &opts, &mut log) {
            Ok(sol) if log.max_exponent >= 2 => return Some((sol, log)),
            Ok(_) => continue,
            Err(_) => return None,
        }
    }
    None
}
