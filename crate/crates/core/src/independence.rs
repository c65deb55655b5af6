//! Dependence structure of distance-matrix entries.
//!
//! The entry `T_b(i, j)` depends only on `b_j` and `b_{j+i}`, so it is
//! associated with the edge `{j, j + i mod n}` on vertex set `Z_n`. A family
//! of entries is mutually independent exactly when its associated multigraph
//! is a forest; a repeated edge counts as a cycle of length two.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::matrix::cyclic_distance;

/// Default cap on the number of distinct coordinates `b_l` a brute-force
/// joint law may touch.
pub const DEFAULT_TOUCHED_LIMIT: usize = 8;

/// A multiset of matrix positions `(i, j)`, `1 <= i <= n/2`, `0 <= j < n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexMultiset {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl IndexMultiset {
    pub fn new(n: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("index sets need n >= 2, got {n}")));
        }
        for &(i, j) in &pairs {
            if i == 0 || i > n / 2 || j >= n {
                return Err(invalid(format!(
                    "position ({i}, {j}) out of range for n = {n}"
                )));
            }
        }
        Ok(IndexMultiset { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct coordinates `l` with `b_l` entering some listed entry, in
    /// increasing order.
    pub fn touched(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self
            .pairs
            .iter()
            .flat_map(|&(i, j)| [j, (j + i) % self.n])
            .collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

/// Multigraph on `Z_n`; edges are stored as `(lo, hi)` with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Multigraph {
    /// Number of connected components, isolated vertices included.
    pub fn components(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        let merged = self.edges.iter().filter(|&&(u, v)| uf.union(u, v)).count();
        self.n - merged
    }
}

pub fn associated_multigraph(s: &IndexMultiset) -> Multigraph {
    let n = s.n;
    let edges = s
        .pairs
        .iter()
        .map(|&(i, j)| {
            let k = (j + i) % n;
            (j.min(k), j.max(k))
        })
        .collect();
    Multigraph { n, edges }
}

/// True iff the associated multigraph is a forest. An edge whose endpoints
/// are already connected closes a cycle.
pub fn is_acyclic(s: &IndexMultiset) -> bool {
    let g = associated_multigraph(s);
    let mut uf = UnionFind::new(g.n);
    g.edges.iter().all(|&(u, v)| uf.union(u, v))
}

/// `m_s = #{d in Z_n : |d|_n = s}`.
pub fn multiplicity(s: usize, n: usize) -> usize {
    if s == 0 || 2 * s == n {
        1
    } else if 2 * s < n {
        2
    } else {
        0
    }
}

/// Exact joint law of a tuple of matrix entries, keyed by value tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPmf {
    pub n: usize,
    pub arity: usize,
    pub probs: BTreeMap<Vec<usize>, BigRational>,
}

impl JointPmf {
    /// Probability of `values` (zero outside the support).
    pub fn prob(&self, values: &[usize]) -> BigRational {
        self.probs
            .get(values)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.probs
            .values()
            .fold(BigRational::zero(), |acc, p| acc + p)
    }
}

pub fn joint_pmf_bruteforce(s: &IndexMultiset) -> Result<JointPmf> {
    joint_pmf_bruteforce_with_limit(s, DEFAULT_TOUCHED_LIMIT)
}

/// Enumerates all `n^t` values of the `t` touched coordinates; the other
/// coordinates do not enter the entries and integrate out.
pub fn joint_pmf_bruteforce_with_limit(s: &IndexMultiset, limit: usize) -> Result<JointPmf> {
    let n = s.n;
    let touched = s.touched();
    let t = touched.len();
    if t > limit {
        return Err(Error::CapacityExceeded {
            what: "touched coordinates",
            got: t,
            limit,
        });
    }
    let slot: HashMap<usize, usize> = touched.iter().enumerate().map(|(k, &l)| (l, k)).collect();
    let positions: Vec<(usize, usize)> = s
        .pairs
        .iter()
        .map(|&(i, j)| (slot[&j], slot[&((j + i) % n)]))
        .collect();

    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut digits = vec![0usize; t];
    loop {
        let key: Vec<usize> = positions
            .iter()
            .map(|&(p, q)| cyclic_distance(digits[p], digits[q], n))
            .collect();
        *counts.entry(key).or_default() += 1;
        // odometer increment
        let mut k = 0;
        while k < t {
            digits[k] += 1;
            if digits[k] < n {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
        if k == t {
            break;
        }
    }
    let denom = BigInt::from(n).pow(t as u32);
    let probs = counts
        .into_iter()
        .map(|(k, c)| (k, BigRational::new(BigInt::from(c), denom.clone())))
        .collect();
    Ok(JointPmf {
        n,
        arity: s.len(),
        probs,
    })
}

/// Compares the brute-force joint law with `prod_w m_{s_w} / n^k` on every
/// value tuple.
pub fn verify_factorization(s: &IndexMultiset) -> Result<bool> {
    verify_factorization_with_limit(s, DEFAULT_TOUCHED_LIMIT)
}

pub fn verify_factorization_with_limit(s: &IndexMultiset, limit: usize) -> Result<bool> {
    let pmf = joint_pmf_bruteforce_with_limit(s, limit)?;
    let n = s.n;
    let k = s.len();
    let values = n / 2 + 1;
    let denom = BigInt::from(n).pow(k as u32);
    let mut tuple = vec![0usize; k];
    let total = values.pow(k as u32);
    for code in 0..total {
        let mut c = code;
        for v in tuple.iter_mut() {
            *v = c % values;
            c /= values;
        }
        let numer: BigInt = tuple
            .iter()
            .map(|&v| BigInt::from(multiplicity(v, n)))
            .product();
        if pmf.prob(&tuple) != BigRational::new(numer, denom.clone()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shape of the circulant graph `C_n(i)`: `gcd(n, i)` components of
/// `n / gcd(n, i)` vertices each. For `i = n/2` the components are single
/// edges.
pub fn circulant_structure(n: usize, i: usize) -> Result<(usize, usize)> {
    if i == 0 || i > n / 2 {
        return Err(invalid(format!(
            "offset {i} out of range 1..={} for n = {n}",
            n / 2
        )));
    }
    let g = n.gcd(&i);
    Ok((g, n / g))
}

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if they were already one.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Every multiset of valid positions for `n` with at most `max_len`
/// elements (the empty one excluded), in lexicographic order.
pub fn all_multisets(n: usize, max_len: usize) -> Vec<IndexMultiset> {
    let positions: Vec<(usize, usize)> = (1..=n / 2)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(
        n: usize,
        positions: &[(usize, usize)],
        start: usize,
        max_len: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<IndexMultiset>,
    ) {
        if !stack.is_empty() {
            let pairs = stack.iter().map(|&k| positions[k]).collect();
            out.push(IndexMultiset { n, pairs });
        }
        if stack.len() == max_len {
            return;
        }
        for k in start..positions.len() {
            stack.push(k);
            rec(n, positions, k, max_len, stack, out);
            stack.pop();
        }
    }
    rec(n, &positions, 0, max_len, &mut stack, &mut out);
    out
}

/// `m_s / n` as an exact rational.
pub fn marginal(s: usize, n: usize) -> BigRational {
    BigRational::new(BigInt::from(multiplicity(s, n)), BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn set(n: usize, pairs: &[(usize, usize)]) -> IndexMultiset {
        IndexMultiset::new(n, pairs.to_vec()).unwrap()
    }

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn multigraph_examples() {
        assert_eq!(
            associated_multigraph(&set(5, &[(1, 0)])).edges,
            vec![(0, 1)]
        );
        assert_eq!(
            associated_multigraph(&set(5, &[(1, 0), (1, 1), (2, 0)])).edges,
            vec![(0, 1), (1, 2), (0, 2)]
        );
        assert_eq!(
            associated_multigraph(&set(4, &[(2, 1), (2, 3)])).edges,
            vec![(1, 3), (1, 3)]
        );
        assert!(IndexMultiset::new(5, vec![(3, 0)]).is_err());
        assert!(IndexMultiset::new(5, vec![(1, 5)]).is_err());
    }

    #[test]
    fn acyclicity_examples() {
        for n in 5..9 {
            assert!(!is_acyclic(&set(n, &[(1, 0), (1, 1), (2, 0)])));
        }
        assert!(is_acyclic(&set(6, &[(1, 0), (1, 2)])));
        assert!(!is_acyclic(&set(4, &[(2, 1), (2, 3)])));
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(1, 5), 2);
        assert_eq!(multiplicity(0, 7), 1);
        assert_eq!(multiplicity(2, 4), 1);
        assert_eq!(multiplicity(3, 4), 0);
        assert_eq!(multiplicity(3, 5), 0);
    }

    #[test]
    fn single_entry_law() {
        let pmf = joint_pmf_bruteforce(&set(5, &[(1, 0)])).unwrap();
        assert_eq!(pmf.prob(&[0]), r(1, 5));
        assert_eq!(pmf.prob(&[1]), r(2, 5));
        assert_eq!(pmf.prob(&[2]), r(2, 5));
        assert_eq!(pmf.total(), BigRational::one());
    }

    #[test]
    fn disjoint_edges_factor() {
        let s = set(11, &[(1, 0), (3, 5)]);
        let pmf = joint_pmf_bruteforce(&s).unwrap();
        for a in 0..=5 {
            for b in 0..=5 {
                assert_eq!(pmf.prob(&[a, b]), marginal(a, 11) * marginal(b, 11));
            }
        }
        assert!(verify_factorization(&s).unwrap());
    }

    #[test]
    fn triangle_is_dependent() {
        let s = set(5, &[(1, 0), (1, 1), (2, 0)]);
        let pmf = joint_pmf_bruteforce(&s).unwrap();
        for v in 1..=2 {
            assert_eq!(pmf.prob(&[0, 0, v]), BigRational::zero());
        }
        assert_eq!(pmf.prob(&[0, 0, 0]), r(1, 25));
        assert!(!verify_factorization(&s).unwrap());
    }

    #[test]
    fn factorization_examples() {
        assert!(verify_factorization(&set(6, &[(1, 0), (2, 2)])).unwrap());
        assert!(verify_factorization(&set(7, &[(3, 4)])).unwrap());
        assert!(verify_factorization(&set(6, &[(3, 1)])).unwrap());
    }

    #[test]
    fn touched_limit() {
        let s = set(10, &[(1, 0), (1, 2), (1, 4), (1, 6), (1, 8)]);
        assert_eq!(s.touched().len(), 10);
        assert!(matches!(
            joint_pmf_bruteforce(&s),
            Err(Error::CapacityExceeded {
                got: 10,
                limit: 8,
                ..
            })
        ));
    }

    #[test]
    fn circulant_structure_examples() {
        assert_eq!(circulant_structure(6, 2).unwrap(), (2, 3));
        assert_eq!(circulant_structure(5, 2).unwrap(), (1, 5));
        assert_eq!(circulant_structure(6, 3).unwrap(), (3, 2));
        assert!(circulant_structure(6, 4).is_err());
        assert!(circulant_structure(6, 0).is_err());
    }

    #[test]
    fn criterion_holds_exhaustively_at_n5() {
        let sets = all_multisets(5, 3);
        // 10 positions: 10 + 55 + 220 multisets
        assert_eq!(sets.len(), 285);
        for s in &sets {
            assert_eq!(verify_factorization(s).unwrap(), is_acyclic(s), "{s:?}");
        }
    }

    #[test]
    fn marginals_and_totals() {
        for n in 2..=9 {
            for s in all_multisets(n, 1) {
                let pmf = joint_pmf_bruteforce(&s).unwrap();
                for v in 0..=n / 2 {
                    assert_eq!(pmf.prob(&[v]), marginal(v, n));
                }
            }
        }
    }

    #[test]
    fn odd_pairs_are_acyclic() {
        for n in [3usize, 5, 7] {
            for s in all_multisets(n, 2).into_iter().filter(|s| s.len() == 2) {
                if s.pairs()[0] != s.pairs()[1] {
                    assert!(is_acyclic(&s), "{s:?}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn multiset() -> impl Strategy<Value = IndexMultiset> {
            (2usize..=9).prop_flat_map(|n| {
                prop::collection::vec((1..=n / 2, 0..n), 1..=4)
                    .prop_map(move |pairs| IndexMultiset::new(n, pairs).unwrap())
            })
        }

        proptest! {
            #[test]
            fn forest_bound(s in multiset()) {
                let g = associated_multigraph(&s);
                let bound = s.n() - g.components();
                if is_acyclic(&s) {
                    prop_assert!(s.len() <= bound);
                    prop_assert_eq!(s.len(), bound);
                } else {
                    prop_assert!(s.len() > bound);
                }
            }

            #[test]
            fn pmf_sums_to_one(s in multiset()) {
                prop_assume!(s.touched().len() <= 6);
                let pmf = joint_pmf_bruteforce(&s).unwrap();
                prop_assert_eq!(pmf.total(), BigRational::one());
            }
        }
    }
}
