//! Reference implementations used as test oracles. They follow the textbook
//! definitions directly and are deliberately slow.
#![allow(dead_code)]

pub mod docs;

use std::collections::{BTreeSet, HashMap};

use lws_core::behavior::{Corpus, GraphView, InvariantKind, TemporalInvariant};
use rand::Rng;

/// Random corpus with at most `max_types` types, `max_traces` traces and
/// traces of length `1..=max_len`.
pub fn random_corpus<R: Rng>(rng: &mut R, max_types: usize, max_traces: usize, max_len: usize) -> Corpus {
    let n_types = rng.random_range(1..=max_types);
    let n_traces = rng.random_range(1..=max_traces);
    let labels: Vec<String> = (0..n_types).map(|i| format!("t{i}")).collect();
    let seqs: Vec<Vec<String>> = (0..n_traces)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            (0..len)
                .map(|_| labels[rng.random_range(0..n_types)].clone())
                .collect()
        })
        .collect();
    Corpus::from_label_sequences(&seqs)
}

/// Invariants by scanning every trace for each ordered pair of distinct
/// observed types.
pub fn brute_force_invariants(corpus: &Corpus) -> BTreeSet<TemporalInvariant> {
    let observed: BTreeSet<usize> = corpus.sequences.iter().flatten().copied().collect();
    let mut out = BTreeSet::new();
    for &a in &observed {
        for &b in &observed {
            if a == b {
                continue;
            }
            let mut always_followed = true;
            let mut never_followed = true;
            let mut always_preceded = true;
            for seq in &corpus.sequences {
                for i in 0..seq.len() {
                    if seq[i] == a {
                        let later = seq[i + 1..].contains(&b);
                        always_followed &= later;
                        never_followed &= !later;
                    }
                    if seq[i] == b {
                        always_preceded &= seq[..i].contains(&a);
                    }
                }
            }
            for (holds, kind) in [
                (always_followed, InvariantKind::AlwaysFollowedBy),
                (never_followed, InvariantKind::NeverFollowedBy),
                (always_preceded, InvariantKind::AlwaysPrecedes),
            ] {
                if holds {
                    out.insert(TemporalInvariant { kind, a, b });
                }
            }
        }
    }
    out
}

/// Whether one complete sequence violates an invariant, by definition.
pub fn violates(inv: &TemporalInvariant, seq: &[usize]) -> bool {
    let pos_a: Vec<usize> = (0..seq.len()).filter(|&i| seq[i] == inv.a).collect();
    let pos_b: Vec<usize> = (0..seq.len()).filter(|&i| seq[i] == inv.b).collect();
    match inv.kind {
        InvariantKind::AlwaysFollowedBy => pos_a.iter().any(|&i| !pos_b.iter().any(|&j| j > i)),
        InvariantKind::NeverFollowedBy => pos_a.iter().any(|&i| pos_b.iter().any(|&j| j > i)),
        InvariantKind::AlwaysPrecedes => pos_b.iter().any(|&j| !pos_a.iter().any(|&i| i < j)),
    }
}

/// All label sequences of length at most `max_len` accepted by the graph,
/// found by plain depth-first path enumeration. Exponential; small graphs only.
pub fn accepted_sequences(view: &GraphView, max_len: usize) -> BTreeSet<Vec<usize>> {
    fn go(
        view: &GraphView,
        v: usize,
        prefix: &mut Vec<usize>,
        max_len: usize,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        for &w in &view.succ[v] {
            let w = w as usize;
            if w == view.terminal {
                out.insert(prefix.clone());
            } else if prefix.len() < max_len {
                prefix.push(view.labels[w] as usize - 1);
                go(view, w, prefix, max_len, out);
                prefix.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(view, view.initial, &mut Vec::new(), max_len, &mut out);
    out
}

/// Whether some accepted sequence of length at most `max_len` violates an
/// invariant.
///
/// Explores label sequences over sets of graph vertices (so each sequence is
/// visited once however many paths spell it). A prefix is summarized by the
/// types seen so far and, per type, the types seen after its last occurrence;
/// together with the vertex set this decides every possible completion, so
/// repeated summaries are pruned.
pub fn enumeration_finds_violation(
    view: &GraphView,
    invariants: &[TemporalInvariant],
    max_len: usize,
) -> bool {
    let n = view.n_types;
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct Key {
        vertices: Vec<usize>,
        seen: u64,
        after_last: Vec<u64>,
    }
    struct Search<'a> {
        view: &'a GraphView,
        invariants: &'a [TemporalInvariant],
        memo: HashMap<Key, usize>,
        max_len: usize,
        n: usize,
    }
    impl Search<'_> {
        // true if a violation is reachable
        fn go(&mut self, key: Key, depth: usize) -> bool {
            let remaining = self.max_len - depth;
            if let Some(&r) = self.memo.get(&key) {
                if r >= remaining {
                    return false;
                }
            }
            self.memo.insert(key.clone(), remaining);
            let view = self.view;
            let ends_here = key
                .vertices
                .iter()
                .any(|&v| view.succ[v].iter().any(|&w| w as usize == view.terminal));
            if ends_here {
                for inv in self.invariants {
                    if inv.kind == InvariantKind::AlwaysFollowedBy
                        && key.seen & (1 << inv.a) != 0
                        && key.after_last[inv.a] & (1 << inv.b) == 0
                    {
                        return true;
                    }
                }
            }
            if remaining == 0 {
                return false;
            }
            for t in 0..self.n {
                let label = t as u32 + 1;
                let mut next: Vec<usize> = key
                    .vertices
                    .iter()
                    .flat_map(|&v| view.succ[v].iter().map(|&w| w as usize))
                    .filter(|&w| view.labels[w] == label)
                    .collect();
                next.sort_unstable();
                next.dedup();
                if next.is_empty() {
                    continue;
                }
                for inv in self.invariants {
                    let broken = match inv.kind {
                        InvariantKind::NeverFollowedBy => inv.b == t && key.seen & (1 << inv.a) != 0,
                        InvariantKind::AlwaysPrecedes => inv.b == t && key.seen & (1 << inv.a) == 0,
                        InvariantKind::AlwaysFollowedBy => false,
                    };
                    if broken {
                        return true;
                    }
                }
                let mut after_last = key.after_last.clone();
                for (s, al) in after_last.iter_mut().enumerate() {
                    if key.seen & (1 << s) != 0 {
                        *al |= 1 << t;
                    }
                }
                after_last[t] = 0;
                let child = Key {
                    vertices: next,
                    seen: key.seen | (1 << t),
                    after_last,
                };
                if self.go(child, depth + 1) {
                    return true;
                }
            }
            false
        }
    }
    let mut search = Search {
        view,
        invariants,
        memo: HashMap::new(),
        max_len,
        n,
    };
    search.go(
        Key {
            vertices: vec![view.initial],
            seen: 0,
            after_last: vec![0; n],
        },
        0,
    )
}

/// Greedy Ward clustering that recomputes every pairwise merge cost from the
/// member points at every step. Returns assignments numbered like
/// `ClusterSet::assignments`.
pub fn ward_oracle(points: &[Vec<f64>], n_clusters: usize, tie_tolerance: f64) -> Vec<usize> {
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let centroid = |c: &[usize]| -> Vec<f64> {
        let d = points[0].len();
        let mut m = vec![0.0; d];
        for &i in c {
            for k in 0..d {
                m[k] += points[i][k];
            }
        }
        m.iter().map(|x| x / c.len() as f64).collect()
    };
    while clusters.len() > n_clusters {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let (ci, cj) = (&clusters[i], &clusters[j]);
                let (mi, mj) = (centroid(ci), centroid(cj));
                let (ni, nj) = (ci.len() as f64, cj.len() as f64);
                let sq: f64 = mi.iter().zip(&mj).map(|(a, b)| (a - b).powi(2)).sum();
                let cost = ni * nj / (ni + nj) * sq;
                let (ia, ja) = (ci[0], cj[0]);
                let key = (ia.min(ja), ia.max(ja));
                let better = match best {
                    None => true,
                    Some((bc, bk, _, _)) => {
                        if (cost - bc).abs() <= tie_tolerance * cost.abs().max(bc.abs()) {
                            key < bk
                        } else {
                            cost < bc
                        }
                    }
                };
                if better {
                    best = Some((cost, key, i, j));
                }
            }
        }
        let (_, _, i, j) = best.unwrap();
        let moved = clusters.remove(j);
        clusters[i].extend(moved);
        clusters[i].sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    let mut out = vec![0; points.len()];
    for (k, c) in clusters.iter().enumerate() {
        for &i in c {
            out[i] = k + 1;
        }
    }
    out
}
