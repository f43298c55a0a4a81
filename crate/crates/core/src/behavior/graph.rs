use std::collections::{BTreeMap, VecDeque};

use super::invariants::{InvariantKind, TemporalInvariant};
use super::{end_label, BehaviorError, Corpus, START};
use crate::par::{self, Execution};

const NONE: u32 = u32::MAX;

/// One partition: a behavior label and the event instances it covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub label: u32,
    pub instances: Vec<u32>,
}

/// A graph whose vertices partition the concrete event instances of a corpus.
///
/// Every trace contributes a dummy start instance, one instance per event and a
/// dummy end instance. Edge counts are the number of instance pairs
/// `(x, succ(x))` between two partitions and are kept exact through splits and
/// merges.
#[derive(Debug, Clone)]
pub struct PartitionGraph {
    n_types: usize,
    inst_succ: Vec<u32>,
    inst_pred: Vec<u32>,
    owner: Vec<u32>,
    vertices: Vec<Option<Vertex>>,
    initial: u32,
    terminal: u32,
    edges: BTreeMap<(u32, u32), u64>,
}

impl PartitionGraph {
    /// One partition per observed behavior type plus the two dummies.
    pub fn initial(corpus: &Corpus) -> Result<Self, BehaviorError> {
        if corpus.is_empty() || corpus.sequences.iter().all(|s| s.is_empty()) {
            return Err(BehaviorError::EmptyCorpus);
        }
        let n = corpus.n_types();
        let end = end_label(n);
        let mut labels = Vec::new();
        let mut succ = Vec::new();
        let mut pred = Vec::new();
        for seq in &corpus.sequences {
            let base = labels.len() as u32;
            let len = seq.len() as u32 + 2;
            labels.push(START);
            labels.extend(seq.iter().map(|&t| t as u32 + 1));
            labels.push(end);
            for k in 0..len {
                succ.push(if k + 1 < len { base + k + 1 } else { NONE });
                pred.push(if k > 0 { base + k - 1 } else { NONE });
            }
        }
        let mut vertex_of_label = vec![NONE; n + 2];
        let mut vertices: Vec<Option<Vertex>> = Vec::new();
        let mut present = vec![false; n + 2];
        for &l in &labels {
            present[l as usize] = true;
        }
        for l in 0..(n + 2) as u32 {
            if present[l as usize] {
                vertex_of_label[l as usize] = vertices.len() as u32;
                vertices.push(Some(Vertex {
                    label: l,
                    instances: Vec::new(),
                }));
            }
        }
        let owner: Vec<u32> = labels.iter().map(|&l| vertex_of_label[l as usize]).collect();
        for (i, &o) in owner.iter().enumerate() {
            vertices[o as usize].as_mut().unwrap().instances.push(i as u32);
        }
        let mut g = Self {
            n_types: n,
            inst_succ: succ,
            inst_pred: pred,
            owner,
            vertices,
            initial: vertex_of_label[START as usize],
            terminal: vertex_of_label[end as usize],
            edges: BTreeMap::new(),
        };
        for x in 0..g.owner.len() as u32 {
            g.add_contribution(x, 1);
        }
        Ok(g)
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn initial_vertex(&self) -> u32 {
        self.initial
    }

    pub fn terminal_vertex(&self) -> u32 {
        self.terminal
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_some())
            .map(|(i, _)| i as u32)
    }

    pub fn contains(&self, v: u32) -> bool {
        self.vertices.get(v as usize).is_some_and(|x| x.is_some())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.iter().filter(|v| v.is_some()).count()
    }

    pub fn vertex(&self, v: u32) -> &Vertex {
        self.vertices[v as usize].as_ref().expect("live vertex")
    }

    pub fn label(&self, v: u32) -> u32 {
        self.vertex(v).label
    }

    pub fn edges(&self) -> &BTreeMap<(u32, u32), u64> {
        &self.edges
    }

    pub fn out_edges(&self, v: u32) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.edges
            .range((v, 0)..=(v, u32::MAX))
            .map(|(&(_, d), &c)| (d, c))
    }

    pub fn owner(&self, instance: u32) -> u32 {
        self.owner[instance as usize]
    }

    pub fn successor(&self, instance: u32) -> Option<u32> {
        Some(self.inst_succ[instance as usize]).filter(|&s| s != NONE)
    }

    fn add_contribution(&mut self, x: u32, delta: i64) {
        let s = self.inst_succ[x as usize];
        if s == NONE {
            return;
        }
        let key = (self.owner[x as usize], self.owner[s as usize]);
        let entry = self.edges.entry(key).or_insert(0);
        *entry = (*entry as i64 + delta) as u64;
        if *entry == 0 {
            self.edges.remove(&key);
        }
    }

    /// Moves `instances` to vertex `to`, keeping edge counts exact.
    fn reassign(&mut self, instances: &[u32], to: u32) {
        let mut affected: Vec<u32> = instances.to_vec();
        affected.extend(
            instances
                .iter()
                .map(|&x| self.inst_pred[x as usize])
                .filter(|&p| p != NONE),
        );
        affected.sort_unstable();
        affected.dedup();
        for &x in &affected {
            self.add_contribution(x, -1);
        }
        for &x in instances {
            self.owner[x as usize] = to;
        }
        for &x in &affected {
            self.add_contribution(x, 1);
        }
    }

    /// Moves `moved` out of `v` into a new vertex with the same label.
    pub fn split(&mut self, v: u32, moved: &[u32]) -> u32 {
        let w = self.vertices.len() as u32;
        let label = self.label(v);
        let mut moved = moved.to_vec();
        moved.sort_unstable();
        {
            let vx = self.vertices[v as usize].as_mut().unwrap();
            vx.instances.retain(|x| moved.binary_search(x).is_err());
            debug_assert!(!vx.instances.is_empty());
        }
        self.vertices.push(Some(Vertex {
            label,
            instances: moved.clone(),
        }));
        self.reassign(&moved, w);
        w
    }

    /// Merges `drop` into `keep`; both must carry the same label.
    pub fn merge(&mut self, keep: u32, drop: u32) {
        debug_assert_eq!(self.label(keep), self.label(drop));
        let moved = self.vertices[drop as usize].take().unwrap().instances;
        self.reassign(&moved, keep);
        let k = self.vertices[keep as usize].as_mut().unwrap();
        k.instances.extend(moved);
        k.instances.sort_unstable();
    }

    /// A compact adjacency view of the graph.
    pub fn view(&self) -> GraphView {
        self.view_with(None)
    }

    /// The view the graph would have after merging `drop` into `keep`.
    pub fn view_merged(&self, keep: u32, drop: u32) -> GraphView {
        self.view_with(Some((keep, drop)))
    }

    fn view_with(&self, merge: Option<(u32, u32)>) -> GraphView {
        let mut dense = vec![NONE; self.vertices.len()];
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for v in self.vertex_ids() {
            if merge.is_some_and(|(_, d)| d == v) {
                continue;
            }
            dense[v as usize] = ids.len() as u32;
            ids.push(v);
            labels.push(self.label(v));
        }
        if let Some((k, d)) = merge {
            dense[d as usize] = dense[k as usize];
        }
        let mut succ: Vec<Vec<u32>> = vec![Vec::new(); ids.len()];
        for &(s, d) in self.edges.keys() {
            let (s, d) = (dense[s as usize], dense[d as usize]);
            let out = &mut succ[s as usize];
            if !out.contains(&d) {
                out.push(d);
            }
        }
        for out in &mut succ {
            out.sort_unstable();
        }
        GraphView {
            initial: dense[self.initial as usize] as usize,
            terminal: dense[self.terminal as usize] as usize,
            ids,
            labels,
            succ,
            n_types: self.n_types,
        }
    }
}

/// Adjacency-only snapshot of a partition graph with dense vertex indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphView {
    /// Partition id for each dense index.
    pub ids: Vec<u32>,
    pub labels: Vec<u32>,
    pub succ: Vec<Vec<u32>>,
    pub initial: usize,
    pub terminal: usize,
    pub n_types: usize,
}

impl GraphView {
    /// Whether some path from the initial to the terminal vertex spells `seq`.
    pub fn accepts(&self, seq: &[usize]) -> bool {
        let mut current = vec![self.initial];
        for &t in seq {
            let label = t as u32 + 1;
            let mut next: Vec<usize> = current
                .iter()
                .flat_map(|&v| self.succ[v].iter().map(|&w| w as usize))
                .filter(|&w| self.labels[w] == label)
                .collect();
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return false;
            }
            current = next;
        }
        current
            .iter()
            .any(|&v| self.succ[v].iter().any(|&w| w as usize == self.terminal))
    }
}

/// A shortest path from `u_s` to `u_e` that violates one invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Index into the invariant list.
    pub invariant: usize,
    /// Dense view indices, starting at the initial and ending at the terminal vertex.
    pub path: Vec<usize>,
}

/// Tracks one invariant along a path. AFby needs two states (nothing pending,
/// `a` awaiting a `b`); NFby and AP need three with an absorbing violation.
fn monitor_step(inv: &TemporalInvariant, state: u8, label: u32) -> u8 {
    let (la, lb) = (inv.a as u32 + 1, inv.b as u32 + 1);
    match inv.kind {
        InvariantKind::AlwaysFollowedBy => {
            if label == la {
                1
            } else if label == lb {
                0
            } else {
                state
            }
        }
        InvariantKind::NeverFollowedBy => match state {
            2 => 2,
            1 if label == lb => 2,
            _ if label == la => 1,
            s => s,
        },
        InvariantKind::AlwaysPrecedes => match state {
            0 if label == la => 1,
            0 if label == lb => 2,
            s => s,
        },
    }
}

fn violating_state(inv: &TemporalInvariant) -> u8 {
    match inv.kind {
        InvariantKind::AlwaysFollowedBy => 1,
        _ => 2,
    }
}

/// Breadth-first search over (vertex, monitor state) pairs for the shortest
/// complete path that ends in the violating state.
pub(crate) fn shortest_violation(view: &GraphView, inv: &TemporalInvariant) -> Option<Vec<usize>> {
    let n = view.labels.len();
    let idx = |v: usize, s: u8| v * 3 + s as usize;
    let mut parent = vec![usize::MAX; n * 3];
    let mut seen = vec![false; n * 3];
    let bad = violating_state(inv);
    let s0 = monitor_step(inv, 0, view.labels[view.initial]);
    let start = idx(view.initial, s0);
    seen[start] = true;
    let mut queue = VecDeque::from([(view.initial, s0)]);
    while let Some((v, s)) = queue.pop_front() {
        if v == view.terminal && s == bad {
            let mut path = vec![v];
            let mut cur = idx(v, s);
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(cur / 3);
            }
            path.reverse();
            return Some(path);
        }
        for &w in &view.succ[v] {
            let w = w as usize;
            let t = monitor_step(inv, s, view.labels[w]);
            let k = idx(w, t);
            if !seen[k] {
                seen[k] = true;
                parent[k] = idx(v, s);
                queue.push_back((w, t));
            }
        }
    }
    None
}

/// At most one shortest counterexample per violated invariant.
pub fn find_counterexamples(
    view: &GraphView,
    invariants: &[TemporalInvariant],
    mode: Execution,
) -> Vec<Counterexample> {
    par::map_range(mode, invariants.len(), |i| {
        shortest_violation(view, &invariants[i]).map(|path| Counterexample { invariant: i, path })
    })
    .into_iter()
    .flatten()
    .collect()
}

/// The counterexample of the first violated invariant, in list order.
pub(crate) fn first_counterexample(
    view: &GraphView,
    invariants: &[TemporalInvariant],
) -> Option<Counterexample> {
    invariants
        .iter()
        .enumerate()
        .find_map(|(i, inv)| shortest_violation(view, inv).map(|path| Counterexample { invariant: i, path }))
}

pub(crate) fn has_counterexample(
    view: &GraphView,
    invariants: &[TemporalInvariant],
    mode: Execution,
) -> bool {
    par::any_range(mode, invariants.len(), |i| {
        shortest_violation(view, &invariants[i]).is_some()
    })
}
