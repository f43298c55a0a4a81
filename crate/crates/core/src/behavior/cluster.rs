use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::BehaviorError;
use crate::par::{self, Execution};

/// Relative tolerance under which two merge costs count as tied.
pub const WARD_TIE_TOLERANCE: f64 = 1e-9;

/// Result of agglomerative clustering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    /// Cluster id in `1..=n_clusters` for each input, clusters numbered by their
    /// smallest member index.
    pub assignments: Vec<usize>,
    /// Size of cluster `i + 1`.
    pub counts: Vec<usize>,
    pub n_clusters: usize,
}

impl ClusterSet {
    /// Input indices assigned to cluster `id` (1-based), ascending.
    pub fn members(&self, id: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == id)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Increase of within-cluster variance when merging two clusters of sizes
/// `n_i`, `n_j` and centroids `m_i`, `m_j`.
pub fn ward_merge_cost(n_i: usize, m_i: &[f64], n_j: usize, m_j: &[f64]) -> f64 {
    let (ni, nj) = (n_i as f64, n_j as f64);
    let sq: f64 = m_i.iter().zip(m_j).map(|(a, b)| (a - b) * (a - b)).sum();
    ni * nj / (ni + nj) * sq
}

/// Whether candidate `a` should be merged before `b`. Costs within the tie
/// tolerance are ordered by `(min id, max id)`.
fn prefer(a: (f64, (usize, usize)), b: (f64, (usize, usize))) -> bool {
    let tol = WARD_TIE_TOLERANCE * a.0.abs().max(b.0.abs());
    if (a.0 - b.0).abs() <= tol {
        a.1 < b.1
    } else {
        a.0 < b.0
    }
}

struct Slot {
    id: usize,
    size: usize,
    centroid: Vec<f64>,
    members: Vec<usize>,
}

fn pair_index(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Bottom-up Ward clustering until `n_clusters` remain.
///
/// Each step merges the pair with the smallest merge cost. Identical inputs
/// are merged up front: their mutual cost is zero, so any greedy run joins them
/// before anything else and the final partition is the same.
pub fn cluster(
    embeddings: &[Vec<f64>],
    n_clusters: usize,
    mode: Execution,
) -> Result<ClusterSet, BehaviorError> {
    let n = embeddings.len();
    if n_clusters == 0 || n_clusters > n {
        return Err(BehaviorError::ClusterCount {
            requested: n_clusters,
            available: n,
        });
    }
    let dim = embeddings[0].len();
    if let Some((index, e)) = embeddings.iter().enumerate().find(|(_, e)| e.len() != dim) {
        return Err(BehaviorError::EmbeddingLength {
            index,
            expected: dim,
            found: e.len(),
        });
    }

    let mut slots: Vec<Slot> = Vec::new();
    let mut by_bits: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, e) in embeddings.iter().enumerate() {
        let key: Vec<u64> = e.iter().map(|x| x.to_bits()).collect();
        match by_bits.get(&key) {
            Some(&s) => {
                slots[s].size += 1;
                slots[s].members.push(i);
            }
            None => {
                by_bits.insert(key, slots.len());
                slots.push(Slot {
                    id: i,
                    size: 1,
                    centroid: e.clone(),
                    members: vec![i],
                });
            }
        }
    }
    if slots.len() < n_clusters {
        // duplicates must be split across clusters; cluster them one by one
        slots = embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| Slot {
                id: i,
                size: 1,
                centroid: e.clone(),
                members: vec![i],
            })
            .collect();
    }

    let u = slots.len();
    let rows: Vec<Vec<f64>> = par::map_range(mode, u, |i| {
        ((i + 1)..u)
            .map(|j| {
                ward_merge_cost(
                    slots[i].size,
                    &slots[i].centroid,
                    slots[j].size,
                    &slots[j].centroid,
                )
            })
            .collect()
    });
    let mut cost: Vec<f64> = rows.into_iter().flatten().collect();
    let mut active = vec![true; u];
    let key = |slots: &[Slot], i: usize, j: usize| {
        let (a, b) = (slots[i].id, slots[j].id);
        (a.min(b), a.max(b))
    };
    let nearest = |slots: &[Slot], cost: &[f64], active: &[bool], i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in (0..u).filter(|&j| j != i && active[j]) {
            let c = cost[pair_index(i, j, u)];
            if best.is_none_or(|(bc, bj)| prefer((c, key(slots, i, j)), (bc, key(slots, i, bj)))) {
                best = Some((c, j));
            }
        }
        best
    };
    let mut nn: Vec<Option<(f64, usize)>> = par::map_range(mode, u, |i| nearest(&slots, &cost, &active, i));

    let mut remaining = u;
    while remaining > n_clusters {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in (0..u).filter(|&i| active[i]) {
            let Some((c, j)) = nn[i] else { continue };
            if pick.is_none_or(|(pc, pi, pj)| prefer((c, key(&slots, i, j)), (pc, key(&slots, pi, pj)))) {
                pick = Some((c, i, j));
            }
        }
        let (_, i, j) = pick.expect("at least two active clusters");
        let (a, b) = if slots[i].id < slots[j].id { (i, j) } else { (j, i) };

        let (na, nb) = (slots[a].size as f64, slots[b].size as f64);
        let merged: Vec<f64> = slots[a]
            .centroid
            .iter()
            .zip(&slots[b].centroid)
            .map(|(x, y)| (na * x + nb * y) / (na + nb))
            .collect();
        let moved = std::mem::take(&mut slots[b].members);
        slots[a].members.extend(moved);
        slots[a].size += slots[b].size;
        slots[a].centroid = merged;
        active[b] = false;
        nn[b] = None;
        remaining -= 1;

        let updated: Vec<(usize, f64)> = par::map_range(mode, u, |k| {
            if k == a || !active[k] {
                return (k, f64::NAN);
            }
            (
                k,
                ward_merge_cost(
                    slots[a].size,
                    &slots[a].centroid,
                    slots[k].size,
                    &slots[k].centroid,
                ),
            )
        });
        for (k, c) in updated {
            if !c.is_nan() {
                cost[pair_index(a, k, u)] = c;
            }
        }
        for k in (0..u).filter(|&k| active[k] && k != a) {
            let stale = matches!(nn[k], Some((_, t)) if t == a || t == b);
            if stale {
                nn[k] = nearest(&slots, &cost, &active, k);
            } else {
                let c = cost[pair_index(a, k, u)];
                if nn[k].is_none_or(|(bc, bj)| prefer((c, key(&slots, k, a)), (bc, key(&slots, k, bj)))) {
                    nn[k] = Some((c, a));
                }
            }
        }
        nn[a] = nearest(&slots, &cost, &active, a);
    }

    let mut finals: Vec<&Slot> = (0..u).filter(|&i| active[i]).map(|i| &slots[i]).collect();
    finals.sort_by_key(|s| s.id);
    let mut assignments = vec![0; n];
    let mut counts = Vec::with_capacity(finals.len());
    for (c, s) in finals.iter().enumerate() {
        for &m in &s.members {
            assignments[m] = c + 1;
        }
        counts.push(s.members.len());
    }
    Ok(ClusterSet {
        assignments,
        counts,
        n_clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair_stays_together() {
        let e = vec![vec![0.0, 1.0], vec![5.0, 5.0], vec![0.0, 1.0]];
        let c = cluster(&e, 2, Execution::Sequential).unwrap();
        assert_eq!(c.assignments, vec![1, 2, 1]);
        assert_eq!(c.counts, vec![2, 1]);
    }

    #[test]
    fn no_merges_when_all_requested() {
        let e = vec![vec![1.0], vec![1.0], vec![2.0]];
        let c = cluster(&e, 3, Execution::Sequential).unwrap();
        assert_eq!(c.assignments, vec![1, 2, 3]);
    }

    #[test]
    fn duplicates_split_when_needed() {
        let e = vec![vec![1.0], vec![1.0], vec![1.0], vec![9.0]];
        let c = cluster(&e, 3, Execution::Sequential).unwrap();
        // zero-cost ties resolved by (min id, max id): 0 and 1 merge first
        assert_eq!(c.assignments, vec![1, 1, 2, 3]);
    }

    #[test]
    fn too_many_clusters() {
        assert!(matches!(
            cluster(&[vec![1.0]], 2, Execution::Sequential),
            Err(BehaviorError::ClusterCount { .. })
        ));
    }

    #[test]
    fn cost_formula() {
        assert_eq!(ward_merge_cost(1, &[0.0, 0.0], 1, &[3.0, 4.0]), 12.5);
        assert_eq!(ward_merge_cost(2, &[0.0], 2, &[1.0]), 1.0);
    }
}
