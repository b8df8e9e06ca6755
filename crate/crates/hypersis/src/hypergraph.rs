//! Weighted directed hypergraphs and their adjacency tensors.
//!
//! A hyperedge has a single tail vertex and a nonempty set of head
//! vertices; the tail is the susceptible party, the heads act on it
//! jointly. An edge with one head is an ordinary directed edge.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::tensor::SparseTensor;

/// One weighted directed hyperedge. Heads are sorted ascending, contain no
/// duplicates, and never include the tail; the weight is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperedge {
    pub tail: usize,
    pub heads: Vec<usize>,
    pub weight: f64,
}

impl Hyperedge {
    /// Vertices involved: heads plus the tail.
    pub fn order(&self) -> usize {
        self.heads.len() + 1
    }
}

/// Weighted directed hypergraph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedHypergraph {
    n: usize,
    edges: Vec<Hyperedge>,
}

impl DirectedHypergraph {
    /// Validates and normalizes edges: heads are sorted, and an edge with a
    /// repeated head, a head equal to the tail, an out-of-range vertex, or
    /// a non-positive weight is rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Hyperedge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("hypergraph needs at least one vertex".into()));
        }
        let mut normalized = Vec::new();
        for mut e in edges {
            if e.tail >= n || e.heads.iter().any(|&h| h >= n) {
                return Err(Error::Input(format!(
                    "edge ({}; {:?}) references a vertex outside 0..{n}",
                    e.tail, e.heads
                )));
            }
            if e.heads.is_empty() {
                return Err(Error::Input(format!("edge ({}; []) has no heads", e.tail)));
            }
            e.heads.sort_unstable();
            if e.heads.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Input(format!(
                    "edge ({}; {:?}) repeats a head",
                    e.tail, e.heads
                )));
            }
            if e.heads.contains(&e.tail) {
                return Err(Error::Input(format!(
                    "edge ({}; {:?}) includes its own tail",
                    e.tail, e.heads
                )));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::Input(format!(
                    "edge ({}; {:?}) has non-positive weight {}",
                    e.tail, e.heads, e.weight
                )));
            }
            normalized.push(e);
        }
        Ok(Self {
            n,
            edges: normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    /// Largest edge order present; 2 when there are no edges.
    pub fn max_edge_order(&self) -> usize {
        self.edges.iter().map(Hyperedge::order).max().unwrap_or(2).max(2)
    }

    /// Adjacency tensors for every order `2..=max_order`.
    ///
    /// An edge of order `m` writes its full weight at every permutation of
    /// its heads (no division), so a unit triple `(i; {j, k})` stores 1 at
    /// both `(i, j, k)` and `(i, k, j)` and contributes twice to
    /// `(A x^2)_i` at `x = 1`. Orders with no edges map to empty tensors;
    /// edges of order above `max_order` are ignored.
    pub fn adjacency_tensors(&self, max_order: usize) -> Result<BTreeMap<usize, SparseTensor>> {
        if !(2..=self.n.max(2)).contains(&max_order) {
            return Err(Error::Input(format!(
                "max_order {max_order} outside 2..={}",
                self.n.max(2)
            )));
        }
        let mut raw: BTreeMap<usize, Vec<(Vec<usize>, f64)>> =
            (2..=max_order).map(|m| (m, Vec::new())).collect();
        for e in &self.edges {
            let m = e.order();
            let Some(bucket) = raw.get_mut(&m) else {
                continue;
            };
            let mut heads = e.heads.clone();
            loop {
                let mut tuple = Vec::with_capacity(m);
                tuple.push(e.tail);
                tuple.extend_from_slice(&heads);
                bucket.push((tuple, e.weight));
                if !crate::tensor::next_permutation(&mut heads) {
                    break;
                }
            }
        }
        let mut out = BTreeMap::new();
        for (m, entries) in raw {
            out.insert(m, SparseTensor::new(m, self.n, entries)?);
        }
        Ok(out)
    }

    /// Second-order adjacency layer as a matrix-shaped tensor.
    pub fn adjacency_matrix(&self) -> SparseTensor {
        self.adjacency_tensors(2)
            .expect("order 2 is always valid")
            .remove(&2)
            .expect("order 2 is always present")
    }

    /// Strong connectivity of the digraph formed by the pairwise edges
    /// alone (arcs run tail to head). Equivalent to irreducibility of the
    /// second-order adjacency layer.
    pub fn pairwise_strongly_connected(&self) -> bool {
        self.adjacency_matrix().is_irreducible()
    }

    /// Preferential-attachment random hypergraph.
    ///
    /// Starts from a complete bidirectional graph on `m + 1` vertices; each
    /// later vertex attaches to `m` distinct existing vertices chosen with
    /// probability proportional to degree (duplicates redrawn), adding unit
    /// edges in both directions. Then `triples` third-order edges are added
    /// with a uniformly random tail and two distinct uniformly random
    /// heads; repeated triples are kept and their weights add up in the
    /// adjacency tensor.
    pub fn random_ba(n: usize, m: usize, triples: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input("attachment count m must be positive".into()));
        }
        if n < m + 1 {
            return Err(Error::Input(format!(
                "need at least m + 1 = {} vertices, got {n}",
                m + 1
            )));
        }
        if triples > 0 && n < 3 {
            return Err(Error::Input("third-order edges need at least 3 vertices".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        // Endpoints of undirected pairwise links, one push per endpoint;
        // sampling this list uniformly is degree-proportional sampling.
        let mut endpoints = Vec::new();
        let link = |a: usize, b: usize, edges: &mut Vec<Hyperedge>, endpoints: &mut Vec<usize>| {
            edges.push(Hyperedge {
                tail: a,
                heads: vec![b],
                weight: 1.0,
            });
            edges.push(Hyperedge {
                tail: b,
                heads: vec![a],
                weight: 1.0,
            });
            endpoints.push(a);
            endpoints.push(b);
        };
        for a in 0..=m {
            for b in (a + 1)..=m {
                link(a, b, &mut edges, &mut endpoints);
            }
        }
        for v in (m + 1)..n {
            let mut targets: Vec<usize> = Vec::with_capacity(m);
            while targets.len() < m {
                let t = endpoints[rng.gen_range(0..endpoints.len())];
                if t != v && !targets.contains(&t) {
                    targets.push(t);
                }
            }
            for t in targets {
                link(v, t, &mut edges, &mut endpoints);
            }
        }
        for _ in 0..triples {
            let tail = rng.gen_range(0..n);
            let a = loop {
                let a = rng.gen_range(0..n);
                if a != tail {
                    break a;
                }
            };
            let b = loop {
                let b = rng.gen_range(0..n);
                if b != tail && b != a {
                    break b;
                }
            };
            edges.push(Hyperedge {
                tail,
                heads: vec![a.min(b), a.max(b)],
                weight: 1.0,
            });
        }
        Self::new(n, edges)
    }

    /// Directed cycle `0 -> 1 -> ... -> n-1 -> 0` of unit pairwise edges
    /// plus the given unit triples `(tail, head, head)`.
    pub fn cycle_with_triples(n: usize, triples: &[(usize, usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input("a cycle needs at least 2 vertices".into()));
        }
        let mut edges: Vec<Hyperedge> = (0..n)
            .map(|i| Hyperedge {
                tail: i,
                heads: vec![(i + 1) % n],
                weight: 1.0,
            })
            .collect();
        for &(tail, h1, h2) in triples {
            edges.push(Hyperedge {
                tail,
                heads: vec![h1, h2],
                weight: 1.0,
            });
        }
        Self::new(n, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_edges() {
        let bad = |tail, heads: Vec<usize>, weight| {
            DirectedHypergraph::new(3, vec![Hyperedge { tail, heads, weight }])
        };
        assert!(bad(0, vec![0], 1.0).is_err());
        assert!(bad(0, vec![1, 1], 1.0).is_err());
        assert!(bad(0, vec![3], 1.0).is_err());
        assert!(bad(0, vec![], 1.0).is_err());
        assert!(bad(0, vec![1], 0.0).is_err());
        assert!(bad(0, vec![1], -2.0).is_err());
        assert!(bad(0, vec![2, 1], 1.0).is_ok());
    }

    #[test]
    fn adjacency_writes_all_head_permutations() {
        let hg = DirectedHypergraph::new(
            4,
            vec![
                Hyperedge {
                    tail: 0,
                    heads: vec![1, 2],
                    weight: 0.5,
                },
                Hyperedge {
                    tail: 1,
                    heads: vec![3],
                    weight: 2.0,
                },
            ],
        )
        .unwrap();
        let tensors = hg.adjacency_tensors(3).unwrap();
        let a2 = &tensors[&2];
        let a3 = &tensors[&3];
        assert_eq!(a2.get(&[1, 3]), 2.0);
        assert_eq!(a3.get(&[0, 1, 2]), 0.5);
        assert_eq!(a3.get(&[0, 2, 1]), 0.5);
        assert_eq!(a3.nnz(), 2);
        // A unit triple contributes twice at x = 1.
        let ones = vec![1.0; 4];
        assert_eq!(a3.apply(&ones).unwrap()[0], 1.0);
    }

    #[test]
    fn repeated_triples_accumulate_weight() {
        let hg = DirectedHypergraph::new(
            3,
            vec![
                Hyperedge {
                    tail: 0,
                    heads: vec![1, 2],
                    weight: 1.0,
                },
                Hyperedge {
                    tail: 0,
                    heads: vec![1, 2],
                    weight: 1.0,
                },
            ],
        )
        .unwrap();
        let a3 = hg.adjacency_tensors(3).unwrap().remove(&3).unwrap();
        assert_eq!(a3.get(&[0, 1, 2]), 2.0);
    }

    #[test]
    fn cycle_is_strongly_connected() {
        let hg = DirectedHypergraph::cycle_with_triples(5, &[(0, 1, 2)]).unwrap();
        assert!(hg.pairwise_strongly_connected());
        assert_eq!(hg.edges().len(), 6);
        let one_way = DirectedHypergraph::new(
            3,
            vec![
                Hyperedge {
                    tail: 0,
                    heads: vec![1],
                    weight: 1.0,
                },
                Hyperedge {
                    tail: 1,
                    heads: vec![2],
                    weight: 1.0,
                },
            ],
        )
        .unwrap();
        assert!(!one_way.pairwise_strongly_connected());
    }

    #[test]
    fn ba_generator_shape_and_determinism() {
        let n = 30;
        let m = 3;
        let hg = DirectedHypergraph::random_ba(n, m, 50, 7).unwrap();
        let pairwise = hg.edges().iter().filter(|e| e.order() == 2).count();
        let third = hg.edges().iter().filter(|e| e.order() == 3).count();
        assert_eq!(pairwise, 2 * (m * (m + 1) / 2 + (n - m - 1) * m));
        assert_eq!(third, 50);
        assert!(hg.pairwise_strongly_connected());
        let again = DirectedHypergraph::random_ba(n, m, 50, 7).unwrap();
        assert_eq!(hg, again);
        let other = DirectedHypergraph::random_ba(n, m, 50, 8).unwrap();
        assert_ne!(hg, other);
    }

    #[test]
    fn ba_rejects_undersized_instances() {
        assert!(DirectedHypergraph::random_ba(3, 3, 0, 1).is_err());
        assert!(DirectedHypergraph::random_ba(2, 1, 5, 1).is_err());
        assert!(DirectedHypergraph::random_ba(4, 3, 0, 1).is_ok());
    }
}
