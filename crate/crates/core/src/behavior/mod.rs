//! Behavior modeling: from session traces to per-group relational models.
//!
//! Traces are turned into transition matrices, flattened and clustered with
//! Ward's criterion. For each cluster, temporal invariants are mined and a
//! partition graph is refined until it admits no path violating them, then
//! coarsened back down while that still holds. Sampling a random walk through
//! the resulting graph yields a behavior sequence.
//!
//! Throughout, vertex labels use the transition-matrix layout: 0 is the
//! dummy start `u_s`, `1..=N_u` are behavior types in catalog order and
//! `N_u + 1` is the dummy end `u_e`.

mod cluster;
mod graph;
mod invariants;
mod matrix;
mod model;
mod refine;

use thiserror::Error;

use crate::ingest::{BehaviorCatalog, SessionTrace};

pub use cluster::{cluster, ward_merge_cost, ClusterSet, WARD_TIE_TOLERANCE};
pub use graph::{find_counterexamples, Counterexample, GraphView, PartitionGraph};
pub use invariants::{count_invariants, mine_invariants, InvariantCounts, InvariantKind, TemporalInvariant};
pub use matrix::{build_matrix, embed, reshape, trace_matrices, TransitionMatrix};
pub use model::{
    learn_group_models, sample_group, GroupModels, ModelEdge, ModelGraph, ModelVertex, RelationalModel,
};
pub use refine::{coarsen, find_split, refine, Split};

/// Errors raised while learning or sampling behavior models.
#[derive(Debug, Error)]
pub enum BehaviorError {
    #[error("no traces to learn from")]
    EmptyCorpus,
    #[error("behavior type `{0}` is not in the catalog")]
    UnknownBehavior(String),
    #[error("cannot form {requested} clusters from {available} traces")]
    ClusterCount { requested: usize, available: usize },
    #[error("embedding {index} has length {found}, expected {expected}")]
    EmbeddingLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("counterexample persists although every partition is a singleton")]
    Unsplittable,
    #[error("sampled sequence exceeded {0} behaviors")]
    MaxLength(usize),
    #[error("vertex {0} has no outgoing edge")]
    DeadEnd(usize),
    #[error("group weights sum to zero")]
    ZeroWeight,
    #[error("model document: {0}")]
    Document(#[from] serde_json::Error),
}

/// User-initiated behavior sequences as type indices into `types`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub types: Vec<String>,
    pub sequences: Vec<Vec<usize>>,
}

impl Corpus {
    /// Uses each trace's user-initiated behaviors; redirect targets are left out
    /// because the server issues them, not the user.
    pub fn from_traces(traces: &[SessionTrace], catalog: &BehaviorCatalog) -> Result<Self, BehaviorError> {
        let types = catalog.labels();
        let sequences = traces
            .iter()
            .map(|t| {
                t.user_behaviors()
                    .map(|b| {
                        catalog
                            .index_of(b)
                            .ok_or_else(|| BehaviorError::UnknownBehavior(b.to_string()))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { types, sequences })
    }

    /// Builds a corpus from label sequences; the type list is the sorted set of
    /// labels that occur.
    pub fn from_label_sequences<S: AsRef<str>>(sequences: &[Vec<S>]) -> Self {
        let mut types: Vec<String> = sequences
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect();
        types.sort();
        types.dedup();
        let sequences = sequences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|l| types.binary_search_by(|t| t.as_str().cmp(l.as_ref())).unwrap())
                    .collect()
            })
            .collect();
        Self { types, sequences }
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// The corpus restricted to the given sequence indices, same type list.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            types: self.types.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
        }
    }

    pub fn labels(&self, seq: &[usize]) -> Vec<String> {
        seq.iter().map(|&t| self.types[t].clone()).collect()
    }
}

/// Matrix/graph label of the dummy start.
pub const START: u32 = 0;

/// Matrix/graph label of the dummy end for `n_types` behavior types.
pub fn end_label(n_types: usize) -> u32 {
    n_types as u32 + 1
}
