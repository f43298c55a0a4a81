use std::collections::VecDeque;

use super::graph::{first_counterexample, has_counterexample, Counterexample, GraphView, PartitionGraph};
use super::invariants::TemporalInvariant;
use super::{end_label, BehaviorError, START};
use crate::par::Execution;

/// Instances to move out of a partition into a new one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub vertex: u32,
    pub moved: Vec<u32>,
}

/// Finds the split that removes a counterexample path.
///
/// The path is followed through the concrete instances: starting from all
/// dummy start instances, keep the instances reachable along the path so far.
/// At the first step where none of them continues into the next vertex, the
/// current vertex mixes instances that do continue there (reached via other
/// paths) with the ones on this prefix. Moving the former out breaks the
/// abstract path. Returns `None` when the whole path is realized by a trace.
pub fn find_split(graph: &PartitionGraph, view: &GraphView, cex: &Counterexample) -> Option<Split> {
    let path: Vec<u32> = cex.path.iter().map(|&i| view.ids[i]).collect();
    let mut reach: Vec<u32> = graph.vertex(path[0]).instances.clone();
    for w in path.windows(2) {
        let (v, next) = (w[0], w[1]);
        let forward: Vec<u32> = reach
            .iter()
            .filter_map(|&x| graph.successor(x))
            .filter(|&s| graph.owner(s) == next)
            .collect();
        if forward.is_empty() {
            let moved: Vec<u32> = graph
                .vertex(v)
                .instances
                .iter()
                .copied()
                .filter(|&x| graph.successor(x).is_some_and(|s| graph.owner(s) == next))
                .collect();
            return Some(Split { vertex: v, moved });
        }
        reach = forward;
        reach.sort_unstable();
        reach.dedup();
    }
    None
}

/// Fallback split: the first vertex in breadth-first order whose instances
/// have successors of different labels gives up one instance, the first whose
/// successor label differs from that of its first instance.
fn arbitrary_split(graph: &PartitionGraph) -> Option<Split> {
    let mut seen = vec![false; graph.vertex_ids().max().map_or(0, |m| m as usize + 1)];
    let mut queue = VecDeque::from([graph.initial_vertex()]);
    seen[graph.initial_vertex() as usize] = true;
    let succ_label = |x: u32| graph.successor(x).map(|s| graph.label(graph.owner(s)));
    while let Some(v) = queue.pop_front() {
        let inst = &graph.vertex(v).instances;
        if inst.len() >= 2 {
            let first = succ_label(inst[0]);
            if let Some(&x) = inst.iter().find(|&&x| succ_label(x) != first) {
                return Some(Split {
                    vertex: v,
                    moved: vec![x],
                });
            }
        }
        for (w, _) in graph.out_edges(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Splits partitions until no invariant has a counterexample.
pub fn refine(
    mut graph: PartitionGraph,
    invariants: &[TemporalInvariant],
) -> Result<PartitionGraph, BehaviorError> {
    loop {
        let view = graph.view();
        let Some(cex) = first_counterexample(&view, invariants) else {
            return Ok(graph);
        };
        let split = find_split(&graph, &view, &cex)
            .or_else(|| arbitrary_split(&graph))
            .ok_or(BehaviorError::Unsplittable)?;
        graph.split(split.vertex, &split.moved);
    }
}

/// Merges same-label partitions wherever the merged graph still satisfies
/// every invariant, sweeping all pairs until a full sweep merges nothing.
pub fn coarsen(
    mut graph: PartitionGraph,
    invariants: &[TemporalInvariant],
    mode: Execution,
) -> PartitionGraph {
    let end = end_label(graph.n_types());
    loop {
        let mut merged = false;
        let ids: Vec<u32> = graph.vertex_ids().collect();
        for (i, &p) in ids.iter().enumerate() {
            for &q in &ids[i + 1..] {
                if !graph.contains(p) || !graph.contains(q) {
                    continue;
                }
                let label = graph.label(p);
                if label != graph.label(q) || label == START || label == end {
                    continue;
                }
                if !has_counterexample(&graph.view_merged(p, q), invariants, mode) {
                    graph.merge(p, q);
                    merged = true;
                }
            }
        }
        if !merged {
            return graph;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::graph::find_counterexamples;
    use crate::behavior::invariants::mine_invariants;
    use crate::behavior::Corpus;

    fn corpus(seqs: &[&[&str]]) -> Corpus {
        let v: Vec<Vec<&str>> = seqs.iter().map(|s| s.to_vec()).collect();
        Corpus::from_label_sequences(&v)
    }

    fn cart_corpus() -> Corpus {
        corpus(&[
            &["home", "view_cart"],
            &["home", "adding_to_cart", "view_cart", "placing_order"],
            &["home", "view_cart", "home", "adding_to_cart", "placing_order"],
            &["home", "adding_to_cart", "home"],
        ])
    }

    #[test]
    fn satisfied_graph_is_unchanged() {
        let c = corpus(&[&["a", "b"]]);
        let g = PartitionGraph::initial(&c).unwrap();
        let inv = mine_invariants(&c);
        let r = refine(g.clone(), &inv).unwrap();
        assert_eq!(r.edges(), g.edges());
        assert_eq!(r.n_vertices(), g.n_vertices());
    }

    #[test]
    fn refinement_removes_violations_and_keeps_traces() {
        let c = cart_corpus();
        let inv = mine_invariants(&c);
        let g = PartitionGraph::initial(&c).unwrap();
        assert!(!find_counterexamples(&g.view(), &inv, Execution::Sequential).is_empty());
        let r = refine(g, &inv).unwrap();
        let view = r.view();
        assert!(find_counterexamples(&view, &inv, Execution::Sequential).is_empty());
        assert!(c.sequences.iter().all(|s| view.accepts(s)));

        let k = coarsen(r.clone(), &inv, Execution::Sequential);
        let kv = k.view();
        assert!(k.n_vertices() <= r.n_vertices());
        assert!(find_counterexamples(&kv, &inv, Execution::Sequential).is_empty());
        assert!(c.sequences.iter().all(|s| kv.accepts(s)));
    }

    #[test]
    fn redundant_partitions_merge() {
        let c = corpus(&[&["a", "b"], &["a", "b"]]);
        let mut g = PartitionGraph::initial(&c).unwrap();
        let a = 1;
        let first = g.vertex(a).instances[0];
        g.split(a, &[first]);
        assert_eq!(g.n_vertices(), 5);
        let k = coarsen(g, &mine_invariants(&c), Execution::Sequential);
        assert_eq!(k.n_vertices(), 4);
    }
}
