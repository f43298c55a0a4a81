use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cluster::{cluster, ClusterSet};
use super::graph::{GraphView, PartitionGraph};
use super::invariants::{mine_invariants, TemporalInvariant};
use super::matrix::{embed, trace_matrices};
use super::refine::{coarsen, refine};
use super::{BehaviorError, Corpus};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVertex {
    pub id: u32,
    /// Matrix-layout label: 0 start, `1..=N_u` behaviors, `N_u + 1` end.
    pub label: u32,
    /// `None` for the two dummy vertices.
    pub behavior_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEdge {
    pub src: u32,
    pub dst: u32,
    pub probability: f64,
    pub count: u64,
}

/// The exported form of a partition graph: no instances, dense vertex ids,
/// edges sorted by `(src, dst)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelGraph {
    pub vertices: Vec<ModelVertex>,
    pub edges: Vec<ModelEdge>,
    pub initial: u32,
    pub terminal: u32,
}

impl ModelGraph {
    pub fn from_partition(graph: &PartitionGraph, types: &[String]) -> Self {
        let view = graph.view();
        let mut dense = std::collections::HashMap::new();
        let vertices = view
            .ids
            .iter()
            .zip(&view.labels)
            .enumerate()
            .map(|(i, (&id, &label))| {
                dense.insert(id, i as u32);
                let behavior_type =
                    (label >= 1 && label as usize <= types.len()).then(|| types[label as usize - 1].clone());
                ModelVertex {
                    id: i as u32,
                    label,
                    behavior_type,
                }
            })
            .collect();
        let mut edges: Vec<ModelEdge> = Vec::new();
        for v in graph.vertex_ids() {
            let total: u64 = graph.out_edges(v).map(|(_, c)| c).sum();
            for (w, c) in graph.out_edges(v) {
                edges.push(ModelEdge {
                    src: dense[&v],
                    dst: dense[&w],
                    probability: c as f64 / total as f64,
                    count: c,
                });
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        Self {
            vertices,
            edges,
            initial: view.initial as u32,
            terminal: view.terminal as u32,
        }
    }

    /// Outgoing edges of `v`.
    pub fn out(&self, v: u32) -> &[ModelEdge] {
        let lo = self.edges.partition_point(|e| e.src < v);
        let hi = self.edges.partition_point(|e| e.src <= v);
        &self.edges[lo..hi]
    }

    pub fn view(&self, n_types: usize) -> GraphView {
        let mut succ = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            succ[e.src as usize].push(e.dst);
        }
        GraphView {
            ids: self.vertices.iter().map(|v| v.id).collect(),
            labels: self.vertices.iter().map(|v| v.label).collect(),
            succ,
            initial: self.initial as usize,
            terminal: self.terminal as usize,
            n_types,
        }
    }

    fn next<R: Rng + ?Sized>(&self, v: u32, rng: &mut R) -> Result<u32, BehaviorError> {
        let out = self.out(v);
        if out.is_empty() {
            return Err(BehaviorError::DeadEnd(v as usize));
        }
        let total: u64 = out.iter().map(|e| e.count).sum();
        if total > 0 {
            let mut r = rng.random_range(0..total);
            for e in out {
                if r < e.count {
                    return Ok(e.dst);
                }
                r -= e.count;
            }
        }
        let mut r: f64 = rng.random::<f64>() * out.iter().map(|e| e.probability).sum::<f64>();
        for e in out {
            if r < e.probability {
                return Ok(e.dst);
            }
            r -= e.probability;
        }
        Ok(out.last().unwrap().dst)
    }
}

/// The learned model of one user group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationalModel {
    /// Behavior types; invariant and label indices refer to this list.
    pub types: Vec<String>,
    pub graph: ModelGraph,
    pub invariants: Vec<TemporalInvariant>,
    /// Number of traces in the group.
    pub group_weight: usize,
}

impl RelationalModel {
    /// Mines invariants, then refines and coarsens the initial partition graph.
    pub fn learn(corpus: &Corpus, mode: Execution) -> Result<Self, BehaviorError> {
        let invariants = mine_invariants(corpus);
        let graph = PartitionGraph::initial(corpus)?;
        let graph = refine(graph, &invariants)?;
        let graph = coarsen(graph, &invariants, mode);
        Ok(Self {
            types: corpus.types.clone(),
            graph: ModelGraph::from_partition(&graph, &corpus.types),
            invariants,
            group_weight: corpus.len(),
        })
    }

    pub fn view(&self) -> GraphView {
        self.graph.view(self.types.len())
    }

    /// Random walk from the start to the end vertex, returning type indices.
    ///
    /// Vertices may be revisited. A walk longer than `max_len` behaviors is an
    /// error rather than a truncated sequence.
    pub fn sample_indices<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_len: usize,
    ) -> Result<Vec<usize>, BehaviorError> {
        let mut out = Vec::new();
        let mut v = self.graph.initial;
        loop {
            v = self.graph.next(v, rng)?;
            if v == self.graph.terminal {
                return Ok(out);
            }
            if out.len() == max_len {
                return Err(BehaviorError::MaxLength(max_len));
            }
            out.push(self.graph.vertices[v as usize].label as usize - 1);
        }
    }

    pub fn sample_sequence<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        max_len: usize,
    ) -> Result<Vec<String>, BehaviorError> {
        Ok(self
            .sample_indices(rng, max_len)?
            .into_iter()
            .map(|t| self.types[t].clone())
            .collect())
    }
}

/// Draws a group index with probability proportional to its weight.
pub fn sample_group<R: Rng + ?Sized>(
    models: &[RelationalModel],
    rng: &mut R,
) -> Result<usize, BehaviorError> {
    let total: u64 = models.iter().map(|m| m.group_weight as u64).sum();
    if total == 0 {
        return Err(BehaviorError::ZeroWeight);
    }
    let mut r = rng.random_range(0..total);
    for (i, m) in models.iter().enumerate() {
        if r < m.group_weight as u64 {
            return Ok(i);
        }
        r -= m.group_weight as u64;
    }
    unreachable!("draw below total weight")
}

/// Models for every user group together with the clustering that formed them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModels {
    pub models: Vec<RelationalModel>,
    pub clusters: ClusterSet,
    /// Wall-clock seconds spent clustering and learning.
    pub abstraction_time_s: f64,
}

impl GroupModels {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BehaviorError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Clusters the corpus into `n_clusters` groups and learns one model per group.
/// Groups are learned in parallel in [`Execution::Parallel`] mode.
pub fn learn_group_models(
    corpus: &Corpus,
    n_clusters: usize,
    mode: Execution,
) -> Result<GroupModels, BehaviorError> {
    let started = Instant::now();
    if corpus.is_empty() {
        return Err(BehaviorError::EmptyCorpus);
    }
    let embeddings: Vec<Vec<f64>> = trace_matrices(corpus, mode).iter().map(embed).collect();
    let clusters = cluster(&embeddings, n_clusters, mode)?;
    let models = par::map_range(mode, clusters.n_clusters, |c| {
        RelationalModel::learn(&corpus.subset(&clusters.members(c + 1)), mode)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(GroupModels {
        models,
        clusters,
        abstraction_time_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn corpus(seqs: &[&[&str]]) -> Corpus {
        let v: Vec<Vec<&str>> = seqs.iter().map(|s| s.to_vec()).collect();
        Corpus::from_label_sequences(&v)
    }

    #[test]
    fn deterministic_chain() {
        let m = RelationalModel::learn(&corpus(&[&["a", "b"]]), Execution::Sequential).unwrap();
        let mut r = rng::seeded(1);
        for _ in 0..20 {
            assert_eq!(m.sample_sequence(&mut r, 1000).unwrap(), vec!["a", "b"]);
        }
    }

    #[test]
    fn loop_limit() {
        let mut m = RelationalModel::learn(&corpus(&[&["a"]]), Execution::Sequential).unwrap();
        // make a → a certain: never reaches the end
        m.graph.edges.retain(|e| !(e.src == 1 && e.dst == 2));
        m.graph.edges.push(ModelEdge {
            src: 1,
            dst: 1,
            probability: 1.0,
            count: 1,
        });
        m.graph.edges.sort_by_key(|e| (e.src, e.dst));
        assert!(matches!(
            m.sample_sequence(&mut rng::seeded(0), 50),
            Err(BehaviorError::MaxLength(50))
        ));
    }

    #[test]
    fn group_draws() {
        let base = RelationalModel::learn(&corpus(&[&["a"]]), Execution::Sequential).unwrap();
        let mut r = rng::seeded(3);
        assert_eq!(sample_group(std::slice::from_ref(&base), &mut r).unwrap(), 0);
        let mut zero = base.clone();
        zero.group_weight = 0;
        let models = vec![base.clone(), zero.clone()];
        assert!((0..100).all(|_| sample_group(&models, &mut r).unwrap() == 0));
        zero.group_weight = 0;
        let mut none = base;
        none.group_weight = 0;
        assert!(matches!(
            sample_group(&[none, zero], &mut r),
            Err(BehaviorError::ZeroWeight)
        ));
    }

    #[test]
    fn weights_follow_cluster_sizes() {
        let mut seqs: Vec<Vec<&str>> = vec![vec!["a", "b"]; 70];
        seqs.extend(vec![vec!["c", "c", "c", "d"]; 30]);
        let c = Corpus::from_label_sequences(&seqs);
        let g = learn_group_models(&c, 2, Execution::Sequential).unwrap();
        let w: Vec<usize> = g.models.iter().map(|m| m.group_weight).collect();
        assert_eq!(w, vec![70, 30]);
    }

    #[test]
    fn single_cluster_equals_monolithic() {
        let c = corpus(&[&["a", "b"], &["b", "a", "c"], &["a"]]);
        let g = learn_group_models(&c, 1, Execution::Sequential).unwrap();
        let m = RelationalModel::learn(&c, Execution::Sequential).unwrap();
        assert_eq!(g.models, vec![m]);
    }

    #[test]
    fn export_round_trip() {
        let c = corpus(&[&["a", "b"], &["b", "a", "c"], &["a", "c", "c"]]);
        let g = learn_group_models(&c, 2, Execution::Sequential).unwrap();
        let back = GroupModels::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
    }
}
