use std::fmt;

use serde::{Deserialize, Serialize};

use super::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InvariantKind {
    /// Every `a` is eventually followed by a `b`.
    AlwaysFollowedBy,
    /// No `a` is ever followed by a `b`.
    NeverFollowedBy,
    /// Every `b` is preceded by some `a`.
    AlwaysPrecedes,
}

impl InvariantKind {
    pub fn short_name(self) -> &'static str {
        match self {
            Self::AlwaysFollowedBy => "AFby",
            Self::NeverFollowedBy => "NFby",
            Self::AlwaysPrecedes => "AP",
        }
    }
}

/// A temporal invariant over behavior type indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TemporalInvariant {
    pub kind: InvariantKind,
    pub a: usize,
    pub b: usize,
}

impl fmt::Display for TemporalInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind.short_name(), self.a, self.b)
    }
}

/// Occurrence, followed-by and precedes counts over a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantCounts {
    pub n_types: usize,
    /// `oc[a]`: occurrences of `a`.
    pub oc: Vec<u64>,
    /// `fo[a * n + b]`: occurrences of `a` with a later `b` in the same trace.
    pub fo: Vec<u64>,
    /// `pr[a * n + b]`: occurrences of `b` with an earlier `a` in the same trace.
    pub pr: Vec<u64>,
}

impl InvariantCounts {
    pub fn fo(&self, a: usize, b: usize) -> u64 {
        self.fo[a * self.n_types + b]
    }

    pub fn pr(&self, a: usize, b: usize) -> u64 {
        self.pr[a * self.n_types + b]
    }
}

/// Collects the counts with one forward and one backward pass per trace.
pub fn count_invariants(corpus: &Corpus) -> InvariantCounts {
    let n = corpus.n_types();
    let mut oc = vec![0u64; n];
    let mut fo = vec![0u64; n * n];
    let mut pr = vec![0u64; n * n];
    let mut seen = vec![false; n];
    for seq in &corpus.sequences {
        seen.iter_mut().for_each(|s| *s = false);
        for &b in seq {
            oc[b] += 1;
            for a in 0..n {
                if seen[a] {
                    pr[a * n + b] += 1;
                }
            }
            seen[b] = true;
        }
        seen.iter_mut().for_each(|s| *s = false);
        for &a in seq.iter().rev() {
            for b in 0..n {
                if seen[b] {
                    fo[a * n + b] += 1;
                }
            }
            seen[a] = true;
        }
    }
    InvariantCounts {
        n_types: n,
        oc,
        fo,
        pr,
    }
}

/// Mines AFby, NFby and AP invariants between distinct observed types.
///
/// Only types that occur in the corpus take part, so no invariant is vacuous.
/// The result is sorted by kind, then `a`, then `b`.
pub fn mine_invariants(corpus: &Corpus) -> Vec<TemporalInvariant> {
    let c = count_invariants(corpus);
    let observed: Vec<usize> = (0..c.n_types).filter(|&t| c.oc[t] > 0).collect();
    let mut out = Vec::new();
    for &a in &observed {
        for &b in &observed {
            if a == b {
                continue;
            }
            if c.fo(a, b) == c.oc[a] {
                out.push(TemporalInvariant {
                    kind: InvariantKind::AlwaysFollowedBy,
                    a,
                    b,
                });
            }
            if c.fo(a, b) == 0 {
                out.push(TemporalInvariant {
                    kind: InvariantKind::NeverFollowedBy,
                    a,
                    b,
                });
            }
            if c.pr(a, b) == c.oc[b] {
                out.push(TemporalInvariant {
                    kind: InvariantKind::AlwaysPrecedes,
                    a,
                    b,
                });
            }
        }
    }
    out.sort();
    out
}

impl TemporalInvariant {
    /// Whether a single sequence satisfies the invariant, by definition.
    pub fn holds_on(&self, seq: &[usize]) -> bool {
        let (a, b) = (self.a, self.b);
        match self.kind {
            InvariantKind::AlwaysFollowedBy => seq
                .iter()
                .enumerate()
                .all(|(i, &x)| x != a || seq[i + 1..].contains(&b)),
            InvariantKind::NeverFollowedBy => seq
                .iter()
                .enumerate()
                .all(|(i, &x)| x != a || !seq[i + 1..].contains(&b)),
            InvariantKind::AlwaysPrecedes => seq
                .iter()
                .enumerate()
                .all(|(i, &x)| x != b || seq[..i].contains(&a)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use InvariantKind::*;

    fn corpus(seqs: &[&[&str]]) -> Corpus {
        let v: Vec<Vec<&str>> = seqs.iter().map(|s| s.to_vec()).collect();
        Corpus::from_label_sequences(&v)
    }

    #[test]
    fn single_trace_two_types() {
        let inv = mine_invariants(&corpus(&[&["a", "b"]]));
        assert_eq!(
            inv,
            vec![
                TemporalInvariant {
                    kind: AlwaysFollowedBy,
                    a: 0,
                    b: 1
                },
                TemporalInvariant {
                    kind: NeverFollowedBy,
                    a: 1,
                    b: 0
                },
                TemporalInvariant {
                    kind: AlwaysPrecedes,
                    a: 0,
                    b: 1
                },
            ]
        );
    }

    #[test]
    fn cart_precedes_order() {
        let c = corpus(&[
            &["home", "adding_to_cart", "placing_order"],
            &["home", "view_user_cart"],
            &[
                "home",
                "adding_to_cart",
                "view_user_cart",
                "placing_order",
                "home",
            ],
        ]);
        let cart = c.types.iter().position(|t| t == "adding_to_cart").unwrap();
        let order = c.types.iter().position(|t| t == "placing_order").unwrap();
        let inv = mine_invariants(&c);
        assert!(inv.contains(&TemporalInvariant {
            kind: AlwaysPrecedes,
            a: cart,
            b: order
        }));
    }

    #[test]
    fn counts_respect_bounds() {
        let c = corpus(&[&["a", "b", "a", "c"], &["c", "a"], &["b", "b"]]);
        let k = count_invariants(&c);
        for a in 0..3 {
            for b in 0..3 {
                assert!(k.fo(a, b) <= k.oc[a]);
                assert!(k.pr(a, b) <= k.oc[b]);
            }
        }
        assert_eq!(k.oc, vec![3, 3, 2]);
        assert_eq!(k.fo(0, 2), 2);
    }
}
