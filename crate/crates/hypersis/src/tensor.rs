//! Sparse cubical tensors in coordinate format.
//!
//! A tensor of order `k` and dimension `n` maps index tuples
//! `(i1, ..., ik)` with `0 <= ij < n` to real weights. Only nonzero
//! entries are stored, sorted lexicographically by index tuple.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Outcome of a diagonal dominance check.
///
/// Row `i` compares `|A[i,...,i]|` against the sum of `|A[i, tail]|` over
/// all other tails. `Strict` means every row wins strictly, `Weak` means
/// every row at least ties, `None` means some row loses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Strict,
    Weak,
    None,
}

/// Sparse tensor of order `k >= 1` over indices `0..dim`.
///
/// Entries are kept sorted by index tuple with no duplicates and no
/// explicitly stored zeros. Constructors sum duplicate tuples and drop
/// exact zeros silently.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    order: usize,
    dim: usize,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl SparseTensor {
    /// Builds a tensor from `(index tuple, weight)` pairs.
    ///
    /// Duplicate tuples are summed; weights that are exactly zero (before
    /// or after summing) are dropped. Rejects out-of-range indices, tuples
    /// of the wrong length, and non-finite weights.
    pub fn new(
        order: usize,
        dim: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Input("tensor order must be at least 1".into()));
        }
        if dim == 0 {
            return Err(Error::Input("tensor dimension must be at least 1".into()));
        }
        let mut list: Vec<(Vec<usize>, f64)> = Vec::new();
        for (tuple, w) in entries {
            if tuple.len() != order {
                return Err(Error::Dimension {
                    expected: order,
                    found: tuple.len(),
                });
            }
            if let Some(&bad) = tuple.iter().find(|&&i| i >= dim) {
                return Err(Error::Input(format!(
                    "index {bad} out of range for dimension {dim}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::Input(format!("non-finite weight {w} at {tuple:?}")));
            }
            list.push((tuple, w));
        }
        Ok(Self::normalized(order, dim, list))
    }

    /// Sorts, merges duplicates, and drops zeros. Indices must already be
    /// validated against `order` and `dim`.
    fn normalized(order: usize, dim: usize, mut list: Vec<(Vec<usize>, f64)>) -> Self {
        list.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut idx = Vec::with_capacity(list.len() * order);
        let mut val = Vec::with_capacity(list.len());
        let mut it = list.into_iter();
        if let Some((first, w)) = it.next() {
            let mut cur = first;
            let mut acc = w;
            for (tuple, w) in it {
                if tuple == cur {
                    acc += w;
                } else {
                    if acc != 0.0 {
                        idx.extend_from_slice(&cur);
                        val.push(acc);
                    }
                    cur = tuple;
                    acc = w;
                }
            }
            if acc != 0.0 {
                idx.extend_from_slice(&cur);
                val.push(acc);
            }
        }
        Self {
            order,
            dim,
            idx,
            val,
        }
    }

    /// Tensor with no stored entries.
    pub fn empty(order: usize, dim: usize) -> Self {
        assert!(order >= 1 && dim >= 1, "order and dimension must be >= 1");
        Self {
            order,
            dim,
            idx: Vec::new(),
            val: Vec::new(),
        }
    }

    /// Order-2 identity.
    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    /// Order-2 tensor with `d` on the diagonal.
    pub fn from_diagonal(d: &[f64]) -> Self {
        let entries = d
            .iter()
            .enumerate()
            .map(|(i, &w)| (vec![i, i], w))
            .collect();
        Self::normalized(2, d.len().max(1), entries)
    }

    /// Order-2 tensor from a dense square matrix.
    pub fn from_matrix(m: &Array2<f64>) -> Self {
        let n = m.nrows().max(1);
        let mut entries = Vec::new();
        for ((i, j), &w) in m.indexed_iter() {
            entries.push((vec![i, j], w));
        }
        Self::normalized(2, n, entries)
    }

    /// Dense square matrix from an order-2 tensor.
    pub fn to_matrix(&self) -> Result<Array2<f64>> {
        if self.order != 2 {
            return Err(Error::Input(format!(
                "cannot convert order-{} tensor to a matrix",
                self.order
            )));
        }
        let mut m = Array2::zeros((self.dim, self.dim));
        for (t, w) in self.entries() {
            m[(t[0], t[1])] = w;
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_empty()
    }

    /// Iterates over `(index tuple, weight)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.idx.chunks_exact(self.order).zip(self.val.iter().copied())
    }

    /// Weight at `index`, zero if not stored. Panics if `index` has the
    /// wrong length.
    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.order, "index tuple has wrong length");
        let (mut lo, mut hi) = (0usize, self.val.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let t = &self.idx[mid * self.order..(mid + 1) * self.order];
            match t.cmp(index) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.val[mid],
            }
        }
        0.0
    }

    /// Largest absolute weight, zero for an empty tensor.
    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Entrywise scaling by a finite constant.
    pub fn scale(&self, c: f64) -> Self {
        assert!(c.is_finite(), "scale factor must be finite");
        let entries = self
            .entries()
            .map(|(t, w)| (t.to_vec(), c * w))
            .collect();
        Self::normalized(self.order, self.dim, entries)
    }

    /// Entrywise sum of two tensors of the same order and dimension.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::Dimension {
                expected: self.order,
                found: other.order,
            });
        }
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut entries: Vec<(Vec<usize>, f64)> =
            self.entries().map(|(t, w)| (t.to_vec(), w)).collect();
        entries.extend(other.entries().map(|(t, w)| (t.to_vec(), w)));
        Ok(Self::normalized(self.order, self.dim, entries))
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Left multiplication by `diag(d)`: entry `(i, ...)` is scaled by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: d.len(),
            });
        }
        let entries = self
            .entries()
            .map(|(t, w)| (t.to_vec(), d[t[0]] * w))
            .collect();
        Ok(Self::normalized(self.order, self.dim, entries))
    }

    /// Contracts the last `modes` modes with the vector `x`, producing a
    /// tensor of order `k - modes`. Requires `modes <= k - 1`.
    pub fn contract(&self, x: &[f64], modes: usize) -> Result<Self> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        if modes >= self.order {
            return Err(Error::Input(format!(
                "cannot contract {modes} modes of an order-{} tensor into a tensor",
                self.order
            )));
        }
        let keep = self.order - modes;
        let entries = self
            .entries()
            .map(|(t, w)| {
                let c = t[keep..].iter().fold(w, |acc, &j| acc * x[j]);
                (t[..keep].to_vec(), c)
            })
            .collect();
        Ok(Self::normalized(keep, self.dim, entries))
    }

    /// Dense vector `(A x^{k-1})_i = sum A[i, j2..jk] x_{j2} ... x_{jk}`.
    /// For an order-1 tensor this is just the densified tensor.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for (t, w) in self.entries() {
            out[t[0]] += t[1..].iter().fold(w, |acc, &j| acc * x[j]);
        }
        Ok(out)
    }

    /// Scalar `A x^k`: every mode contracted with `x`.
    pub fn full_contract(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut s = 0.0;
        for (t, w) in self.entries() {
            s += t.iter().fold(w, |acc, &j| acc * x[j]);
        }
        Ok(s)
    }

    /// Matrix-tensor product `(R A)[i, rest] = sum_j R[i, j] A[j, rest]`.
    pub fn matrix_product(r: &Array2<f64>, a: &Self) -> Result<Self> {
        if r.nrows() != a.dim || r.ncols() != a.dim {
            return Err(Error::Dimension {
                expected: a.dim,
                found: r.nrows().min(r.ncols()),
            });
        }
        let mut entries = Vec::new();
        for (t, w) in a.entries() {
            let j = t[0];
            for i in 0..a.dim {
                let c = r[(i, j)];
                if c != 0.0 {
                    let mut tuple = t.to_vec();
                    tuple[0] = i;
                    entries.push((tuple, c * w));
                }
            }
        }
        Ok(Self::normalized(a.order, a.dim, entries))
    }

    /// Averages each entry over all permutations of the trailing `k - 1`
    /// modes. The result leaves `A x^{k-1}` unchanged for every `x` and is
    /// a fixed point of this operation.
    pub fn almost_symmetrize(&self) -> Self {
        if self.order <= 2 {
            return self.clone();
        }
        // Group by (first index, sorted tail); each group's mean over its
        // distinct tail arrangements becomes the weight at every arrangement.
        let mut groups: std::collections::BTreeMap<Vec<usize>, f64> =
            std::collections::BTreeMap::new();
        for (t, w) in self.entries() {
            let mut key = t.to_vec();
            key[1..].sort_unstable();
            *groups.entry(key).or_insert(0.0) += w;
        }
        let mut entries = Vec::new();
        for (key, total) in groups {
            let count = distinct_arrangements(&key[1..]);
            let w = total / count as f64;
            let mut tuple = key;
            loop {
                entries.push((tuple.clone(), w));
                if !next_permutation(&mut tuple[1..]) {
                    break;
                }
            }
        }
        Self::normalized(self.order, self.dim, entries)
    }

    /// True when the tensor is unchanged (within `tol`, entrywise) by
    /// [`Self::almost_symmetrize`].
    pub fn is_almost_symmetric(&self, tol: f64) -> bool {
        match self.sub(&self.almost_symmetrize()) {
            Ok(diff) => diff.max_abs() <= tol,
            Err(_) => false,
        }
    }

    /// Order `k + 1` tensor with `lift(A)[i, i, rest] = A[i, rest]` and
    /// zeros elsewhere. Contracting the lift with `y` on all trailing modes
    /// gives `y_i (A y^{k-1})_i`.
    pub fn lift(&self) -> Self {
        let entries = self
            .entries()
            .map(|(t, w)| {
                let mut tuple = Vec::with_capacity(self.order + 1);
                tuple.push(t[0]);
                tuple.extend_from_slice(t);
                (tuple, w)
            })
            .collect();
        Self::normalized(self.order + 1, self.dim, entries)
    }

    /// Per-row sums of weights: `out[i] = sum over tails of A[i, tail]`.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (t, w) in self.entries() {
            out[t[0]] += w;
        }
        out
    }

    /// Per-row sums of absolute weights.
    pub fn abs_row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (t, w) in self.entries() {
            out[t[0]] += w.abs();
        }
        out
    }

    /// `out[i]` is true when row `i` holds at least one nonzero entry.
    pub fn rows_nonzero(&self) -> Vec<bool> {
        let mut out = vec![false; self.dim];
        for (t, _) in self.entries() {
            out[t[0]] = true;
        }
        out
    }

    /// Classifies diagonal dominance across all rows.
    pub fn diagonal_dominance(&self) -> Dominance {
        let mut diag = vec![0.0; self.dim];
        let mut off = vec![0.0; self.dim];
        for (t, w) in self.entries() {
            if t.iter().all(|&j| j == t[0]) {
                diag[t[0]] = w.abs();
            } else {
                off[t[0]] += w.abs();
            }
        }
        if diag.iter().zip(&off).all(|(d, o)| d > o) {
            Dominance::Strict
        } else if diag.iter().zip(&off).all(|(d, o)| d >= o) {
            Dominance::Weak
        } else {
            Dominance::None
        }
    }

    /// Irreducibility in the strict tensor sense.
    ///
    /// The tensor is reducible when some nonempty proper subset `S` of the
    /// indices has no stored entry whose first index lies in `S` while all
    /// remaining indices lie outside `S`. For order 2 this coincides with
    /// strong connectivity of the digraph of nonzero entries.
    ///
    /// For higher orders, candidate subsets avoiding a fixed vertex are
    /// closed under union, so for each excluded vertex the largest
    /// candidate is found by peeling: repeatedly discard any member `i`
    /// that has an entry `(i, tail)` with the whole tail outside the
    /// current set. The tensor is reducible exactly when some peel leaves
    /// a nonempty set.
    pub fn is_irreducible(&self) -> bool {
        let n = self.dim;
        if n == 1 {
            return true;
        }
        if self.order == 2 {
            return self.matrix_strongly_connected();
        }
        let rows = self.row_ranges();
        for v in 0..n {
            let mut in_set = vec![true; n];
            in_set[v] = false;
            let mut size = n - 1;
            loop {
                let mut removed = false;
                for i in 0..n {
                    if !in_set[i] {
                        continue;
                    }
                    let escapes = self.idx[rows[i].clone()]
                        .chunks_exact(self.order)
                        .any(|t| t[1..].iter().all(|&j| !in_set[j]));
                    if escapes {
                        in_set[i] = false;
                        size -= 1;
                        removed = true;
                    }
                }
                if !removed {
                    break;
                }
            }
            if size > 0 {
                return false;
            }
        }
        true
    }

    /// Flat index ranges of the entries in each row (entries are sorted, so
    /// rows are contiguous).
    fn row_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = vec![0..0; self.dim];
        let mut pos = 0;
        for (t, _) in self.entries() {
            let start = pos * self.order;
            let end = start + self.order;
            let r = &mut ranges[t[0]];
            if r.start == r.end {
                *r = start..end;
            } else {
                r.end = end;
            }
            pos += 1;
        }
        ranges
    }

    fn matrix_strongly_connected(&self) -> bool {
        let n = self.dim;
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for (t, _) in self.entries() {
            fwd[t[0]].push(t[1]);
            bwd[t[1]].push(t[0]);
        }
        reaches_all(&fwd, n) && reaches_all(&bwd, n)
    }
}

/// Breadth-first check that every vertex is reachable from vertex 0.
fn reaches_all(adj: &[Vec<usize>], n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// Number of distinct arrangements of a multiset given as a sorted slice.
fn distinct_arrangements(sorted: &[usize]) -> u64 {
    let mut total: u64 = 1;
    for m in 2..=sorted.len() as u64 {
        total *= m;
    }
    let mut run = 1u64;
    let mut run_fact = 1u64;
    for w in 1..sorted.len() {
        if sorted[w] == sorted[w - 1] {
            run += 1;
            run_fact *= run;
        } else {
            run = 1;
        }
        if run == 1 {
            total /= run_fact;
            run_fact = 1;
        }
    }
    total / run_fact
}

/// Advances `a` to its next lexicographic permutation; false when `a` was
/// already the last one.
pub(crate) fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t3(entries: &[(usize, usize, usize, f64)], dim: usize) -> SparseTensor {
        SparseTensor::new(
            3,
            dim,
            entries.iter().map(|&(i, j, k, w)| (vec![i, j, k], w)),
        )
        .unwrap()
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let t = SparseTensor::new(
            2,
            3,
            vec![
                (vec![0, 1], 2.0),
                (vec![0, 1], 3.0),
                (vec![2, 2], 0.0),
                (vec![1, 0], 1.0),
                (vec![1, 0], -1.0),
            ],
        )
        .unwrap();
        assert_eq!(t.nnz(), 1);
        assert_eq!(t.get(&[0, 1]), 5.0);
        assert_eq!(t.get(&[1, 0]), 0.0);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(SparseTensor::new(2, 3, vec![(vec![0, 3], 1.0)]).is_err());
        assert!(SparseTensor::new(2, 3, vec![(vec![0], 1.0)]).is_err());
        assert!(SparseTensor::new(2, 3, vec![(vec![0, 0], f64::NAN)]).is_err());
        assert!(SparseTensor::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn contraction_matches_hand_computation() {
        // A[0,1,2] = 2, A[1,0,0] = 3; x = (1, 2, 3).
        let t = t3(&[(0, 1, 2, 2.0), (1, 0, 0, 3.0)], 3);
        let x = [1.0, 2.0, 3.0];
        let v = t.apply(&x).unwrap();
        assert_eq!(v, vec![2.0 * 2.0 * 3.0, 3.0 * 1.0 * 1.0, 0.0]);
        let m = t.contract(&x, 1).unwrap();
        assert_eq!(m.get(&[0, 1]), 6.0);
        assert_eq!(m.get(&[1, 0]), 3.0);
        // First mode contracts too: 2*1*2*3 + 3*2*1*1.
        assert_eq!(t.full_contract(&x).unwrap(), 12.0 + 6.0);
    }

    #[test]
    fn matrix_product_matches_dense() {
        let a = t3(&[(0, 1, 2, 2.0), (1, 0, 1, -1.0)], 3);
        let mut r = Array2::zeros((3, 3));
        r[(0, 0)] = 1.0;
        r[(0, 1)] = 2.0;
        r[(2, 1)] = -3.0;
        let p = SparseTensor::matrix_product(&r, &a).unwrap();
        assert_eq!(p.get(&[0, 1, 2]), 2.0);
        assert_eq!(p.get(&[0, 0, 1]), -2.0);
        assert_eq!(p.get(&[2, 0, 1]), 3.0);
        assert_eq!(p.nnz(), 3);
    }

    #[test]
    fn symmetrize_preserves_apply_and_is_idempotent() {
        let t = t3(&[(0, 1, 2, 4.0), (0, 2, 1, 2.0), (1, 2, 2, 5.0)], 3);
        let s = t.almost_symmetrize();
        assert_eq!(s.get(&[0, 1, 2]), 3.0);
        assert_eq!(s.get(&[0, 2, 1]), 3.0);
        assert_eq!(s.get(&[1, 2, 2]), 5.0);
        let x = [0.3, 0.7, 0.2];
        let a = t.apply(&x).unwrap();
        let b = s.apply(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-15);
        }
        assert_eq!(s.almost_symmetrize(), s);
        assert!(s.is_almost_symmetric(0.0));
        assert!(!t.is_almost_symmetric(0.5));
    }

    #[test]
    fn lift_reproduces_diagonal_product() {
        let b = SparseTensor::new(2, 3, vec![(vec![0, 1], 2.0), (vec![2, 0], 1.5)]).unwrap();
        let lifted = b.lift();
        assert_eq!(lifted.order(), 3);
        assert_eq!(lifted.get(&[0, 0, 1]), 2.0);
        assert_eq!(lifted.get(&[2, 2, 0]), 1.5);
        let y = [0.5, 0.25, 0.8];
        let by = b.apply(&y).unwrap();
        let ly = lifted.apply(&y).unwrap();
        for i in 0..3 {
            assert!((ly[i] - y[i] * by[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn dominance_classification() {
        let strict = SparseTensor::new(
            2,
            2,
            vec![(vec![0, 0], 3.0), (vec![0, 1], 1.0), (vec![1, 1], 2.0)],
        )
        .unwrap();
        assert_eq!(strict.diagonal_dominance(), Dominance::Strict);
        let weak = SparseTensor::new(
            2,
            2,
            vec![(vec![0, 0], 1.0), (vec![0, 1], 1.0), (vec![1, 1], 2.0)],
        )
        .unwrap();
        assert_eq!(weak.diagonal_dominance(), Dominance::Weak);
        let none = SparseTensor::new(2, 2, vec![(vec![0, 1], 1.0)]).unwrap();
        assert_eq!(none.diagonal_dominance(), Dominance::None);
    }

    #[test]
    fn irreducibility_matrix_cases() {
        let cycle = SparseTensor::new(2, 3, vec![(vec![0, 1], 1.0), (vec![1, 2], 1.0), (vec![2, 0], 1.0)])
            .unwrap();
        assert!(cycle.is_irreducible());
        let chain = SparseTensor::new(2, 3, vec![(vec![0, 1], 1.0), (vec![1, 2], 1.0)]).unwrap();
        assert!(!chain.is_irreducible());
        assert!(SparseTensor::empty(2, 1).is_irreducible());
        assert!(!SparseTensor::empty(2, 2).is_irreducible());
    }

    #[test]
    fn strongly_connected_pattern_can_still_be_reducible() {
        // Entry pairs (1,2), (1,3), (2,1), (3,1) form a strongly connected
        // digraph, yet S = {0, 1} has no entry with first index in S and
        // both trailing indices outside S.
        let t = t3(
            &[
                (0, 1, 2, 1.0),
                (0, 2, 1, 1.0),
                (1, 0, 0, 1.0),
                (2, 0, 0, 1.0),
            ],
            3,
        );
        assert!(!t.is_irreducible());
    }

    #[test]
    fn dense_positive_order3_is_irreducible() {
        let mut entries = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    entries.push((vec![i, j, k], 1.0));
                }
            }
        }
        let t = SparseTensor::new(3, 3, entries).unwrap();
        assert!(t.is_irreducible());
        assert!(!SparseTensor::empty(3, 3).is_irreducible());
    }

    #[test]
    fn arrangement_counts() {
        assert_eq!(distinct_arrangements(&[1, 2, 3]), 6);
        assert_eq!(distinct_arrangements(&[1, 1, 2]), 3);
        assert_eq!(distinct_arrangements(&[2, 2, 2]), 1);
        assert_eq!(distinct_arrangements(&[4]), 1);
        assert_eq!(distinct_arrangements(&[]), 1);
    }
}
