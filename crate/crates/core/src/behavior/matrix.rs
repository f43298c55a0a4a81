use serde::{Deserialize, Serialize};

use super::{BehaviorError, Corpus};
use crate::par::{self, Execution};

/// A `(N_u + 2) × (N_u + 2)` row-stochastic transition matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub n_types: usize,
    pub p: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.n_types + 2
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.p[r * self.dim() + c]
    }

    pub fn zeros(n_types: usize) -> Self {
        let d = n_types + 2;
        Self {
            n_types,
            p: vec![0.0; d * d],
        }
    }

    /// Row-normalizes raw transition counts.
    pub fn from_counts(n_types: usize, counts: &[u64]) -> Self {
        let d = n_types + 2;
        let mut p = vec![0.0; d * d];
        for r in 0..d {
            let row = &counts[r * d..(r + 1) * d];
            let total: u64 = row.iter().sum();
            if total > 0 {
                for c in 0..d {
                    p[r * d + c] = row[c] as f64 / total as f64;
                }
            }
        }
        Self { n_types, p }
    }
}

/// Counts of `u_r → u_c` over the sequences, with `u_s` prepended and `u_e`
/// appended to each.
pub(crate) fn transition_counts<'a>(
    n_types: usize,
    seqs: impl IntoIterator<Item = &'a Vec<usize>>,
) -> Vec<u64> {
    let d = n_types + 2;
    let mut counts = vec![0u64; d * d];
    for seq in seqs {
        let mut prev = 0;
        for &t in seq {
            counts[prev * d + t + 1] += 1;
            prev = t + 1;
        }
        counts[prev * d + d - 1] += 1;
    }
    counts
}

/// The maximum-likelihood Markov matrix of the whole corpus.
pub fn build_matrix(corpus: &Corpus) -> Result<TransitionMatrix, BehaviorError> {
    if corpus.is_empty() {
        return Err(BehaviorError::EmptyCorpus);
    }
    let counts = transition_counts(corpus.n_types(), &corpus.sequences);
    Ok(TransitionMatrix::from_counts(corpus.n_types(), &counts))
}

/// One matrix per sequence.
pub fn trace_matrices(corpus: &Corpus, mode: Execution) -> Vec<TransitionMatrix> {
    par::map_slice(mode, &corpus.sequences, |seq| {
        TransitionMatrix::from_counts(corpus.n_types(), &transition_counts(corpus.n_types(), [seq]))
    })
}

/// Flattens a matrix: element `(r, c)` lands at index `r·(N_u+2) + c`.
pub fn embed(m: &TransitionMatrix) -> Vec<f64> {
    m.p.clone()
}

/// Inverse of [`embed`].
pub fn reshape(n_types: usize, v: &[f64]) -> Result<TransitionMatrix, BehaviorError> {
    let d = n_types + 2;
    if v.len() != d * d {
        return Err(BehaviorError::EmbeddingLength {
            index: 0,
            expected: d * d,
            found: v.len(),
        });
    }
    Ok(TransitionMatrix {
        n_types,
        p: v.to_vec(),
    })
}
