//! Chromatic polynomials of circulant graphs and exact moments of `D`.
//!
//! A mapping `b` properly colours the circulant graph `C_n(i)` exactly when
//! row `i` of its distance matrix has no zero, so with `p_i = P_i(n) / n^n`
//! the zero-row count satisfies `E[D] = floor(n/2) - sum_i p_i`, and the
//! variance follows from `P_{i,j}`, the chromatic polynomial of `C_n(i, j)`.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::matrix::cyclic_distance;
use crate::polynomial::IntPolynomial;

/// Default vertex limit for [`chromatic_poly`] and, through `P_{i,j}`, for
/// [`variance_d`].
pub const DEFAULT_CHROMATIC_LIMIT: usize = 14;

/// Simple undirected graph on `0..v`. Parallel edges collapse; a loop is
/// only recorded as a flag since it makes every colouring improper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    v: usize,
    edges: BTreeSet<(usize, usize)>,
    has_loop: bool,
}

impl SimpleGraph {
    pub fn new(v: usize) -> Self {
        SimpleGraph {
            v,
            edges: BTreeSet::new(),
            has_loop: false,
        }
    }

    pub fn from_edges(v: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(v);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a >= self.v || b >= self.v {
            return Err(invalid(format!(
                "edge ({a}, {b}) out of range for {} vertices",
                self.v
            )));
        }
        if a == b {
            self.has_loop = true;
        } else {
            self.edges.insert((a.min(b), a.max(b)));
        }
        Ok(())
    }

    pub fn vertices(&self) -> usize {
        self.v
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_loop(&self) -> bool {
        self.has_loop
    }

    /// True if `colours[u] != colours[w]` on every edge.
    pub fn is_proper_colouring(&self, colours: &[usize]) -> bool {
        !self.has_loop && self.edges.iter().all(|&(a, b)| colours[a] != colours[b])
    }
}

/// The circulant graph `C_n(offsets)`: `r ~ s` iff `|r - s|_n` is an offset.
pub fn circulant_graph(n: usize, offsets: &[usize]) -> Result<SimpleGraph> {
    if offsets.is_empty() {
        return Err(invalid("circulant graph needs at least one offset"));
    }
    if let Some(&i) = offsets.iter().find(|&&i| i == 0 || i > n / 2) {
        return Err(invalid(format!(
            "offset {i} out of range 1..={} for n = {n}",
            n / 2
        )));
    }
    let mut g = SimpleGraph::new(n);
    for r in 0..n {
        for s in r + 1..n {
            if offsets.contains(&cyclic_distance(r, s, n)) {
                g.add_edge(r, s)?;
            }
        }
    }
    Ok(g)
}

pub fn chromatic_poly(g: &SimpleGraph) -> Result<IntPolynomial> {
    chromatic_poly_with_limit(g, DEFAULT_CHROMATIC_LIMIT)
}

/// Deletion–contraction with component splitting, closed forms for trees,
/// cycles and complete graphs, simplicial-vertex elimination and a memo on
/// relabelled adjacency.
pub fn chromatic_poly_with_limit(g: &SimpleGraph, limit: usize) -> Result<IntPolynomial> {
    if g.v > limit.min(64) {
        return Err(Error::CapacityExceeded {
            what: "vertex count for chromatic polynomial",
            got: g.v,
            limit: limit.min(64),
        });
    }
    if g.has_loop {
        return Ok(IntPolynomial::zero());
    }
    let mut adj = vec![0u64; g.v];
    for &(a, b) in &g.edges {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    Ok(DeletionContraction::default().solve(adj))
}

#[derive(Default)]
struct DeletionContraction {
    memo: HashMap<Vec<u64>, IntPolynomial>,
}

impl DeletionContraction {
    fn solve(&mut self, adj: Vec<u64>) -> IntPolynomial {
        let k = adj.len();
        if k == 0 {
            return IntPolynomial::one();
        }
        let comps = components(&adj);
        if comps.len() > 1 {
            return comps.into_iter().fold(IntPolynomial::one(), |acc, mask| {
                &acc * &self.solve(induced(&adj, mask))
            });
        }
        let degrees: Vec<u32> = adj.iter().map(|a| a.count_ones()).collect();
        let m = degrees.iter().sum::<u32>() as usize / 2;
        let x = IntPolynomial::x();
        if m + 1 == k {
            // tree
            return &x * &IntPolynomial::x_minus(1).pow(m as u32);
        }
        if m == k * (k - 1) / 2 {
            return IntPolynomial::falling_factorial(k);
        }
        if m == k && degrees.iter().all(|&d| d == 2) {
            return cycle_poly(k);
        }
        if let Some(v) = (0..k).find(|&v| is_clique(&adj, adj[v])) {
            let rest = induced(&adj, full_mask(k) & !(1 << v));
            return &IntPolynomial::x_minus(degrees[v] as i64) * &self.solve(rest);
        }

        let adj = relabel(&adj, &degrees);
        if let Some(p) = self.memo.get(&adj) {
            return p.clone();
        }
        let degrees: Vec<u32> = adj.iter().map(|a| a.count_ones()).collect();
        let u = (0..k).min_by_key(|&v| degrees[v]).unwrap();
        let w = bits(adj[u]).max_by_key(|&v| degrees[v]).unwrap();

        let mut deleted = adj.clone();
        deleted[u] &= !(1 << w);
        deleted[w] &= !(1 << u);

        // contract w into u, then drop w
        let mut merged = deleted.clone();
        let moved = merged[w];
        merged[u] |= moved;
        for t in bits(moved) {
            merged[t] |= 1 << u;
        }
        let contracted = induced(&merged, full_mask(k) & !(1 << w));

        let p = &self.solve(deleted) - &self.solve(contracted);
        self.memo.insert(adj, p.clone());
        p
    }
}

fn full_mask(k: usize) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let t = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(t)
    })
}

fn is_clique(adj: &[u64], set: u64) -> bool {
    bits(set).all(|v| adj[v] & set == set & !(1 << v))
}

/// Connected components as vertex masks, ordered by smallest vertex.
fn components(adj: &[u64]) -> Vec<u64> {
    let mut left = full_mask(adj.len());
    let mut out = Vec::new();
    while left != 0 {
        let mut comp = 1u64 << left.trailing_zeros();
        let mut frontier = comp;
        while frontier != 0 {
            let reach = bits(frontier).fold(0, |acc, v| acc | adj[v]);
            frontier = reach & !comp;
            comp |= reach;
        }
        out.push(comp);
        left &= !comp;
    }
    out
}

/// Subgraph induced by `mask`, vertices renumbered in increasing order.
fn induced(adj: &[u64], mask: u64) -> Vec<u64> {
    let keep: Vec<usize> = bits(mask).collect();
    let mut pos = [usize::MAX; 64];
    for (new, &old) in keep.iter().enumerate() {
        pos[old] = new;
    }
    keep.iter()
        .map(|&old| bits(adj[old] & mask).fold(0u64, |acc, t| acc | 1 << pos[t]))
        .collect()
}

/// Renumbers vertices by degree and neighbour-degree sum so that isomorphic
/// minors often share a memo key.
fn relabel(adj: &[u64], degrees: &[u32]) -> Vec<u64> {
    let k = adj.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&v| {
        let nd: u32 = bits(adj[v]).map(|t| degrees[t]).sum();
        (degrees[v], nd, v)
    });
    let mut pos = vec![0usize; k];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    order
        .iter()
        .map(|&old| bits(adj[old]).fold(0u64, |acc, t| acc | 1 << pos[t]))
        .collect()
}

/// `(x - 1)^k + (-1)^k (x - 1)`, the chromatic polynomial of a `k`-cycle
/// (`x (x - 1)` for `k = 2`).
fn cycle_poly(k: usize) -> IntPolynomial {
    let xm1 = IntPolynomial::x_minus(1);
    let tail = if k.is_multiple_of(2) {
        xm1.clone()
    } else {
        -&xm1
    };
    &xm1.pow(k as u32) + &tail
}

/// `P_i(x) = ((x - 1)^l + (-1)^l (x - 1))^(n / l)` with `l = n / gcd(n, i)`,
/// since `C_n(i)` is `gcd(n, i)` disjoint `l`-cycles.
pub fn closed_form_pi(n: usize, i: usize) -> Result<IntPolynomial> {
    if i == 0 || i > n / 2 {
        return Err(invalid(format!(
            "offset {i} out of range 1..={} for n = {n}",
            n / 2
        )));
    }
    let l = n / n.gcd(&i);
    Ok(cycle_poly(l).pow((n / l) as u32))
}

fn n_pow_n(n: usize) -> BigInt {
    BigInt::from(n).pow(n as u32)
}

/// `p_i = P_i(n) / n^n` for `i = 1..=n/2`: the probability that row `i` of
/// the distance matrix has no zero.
pub fn zero_free_probabilities(n: usize) -> Result<Vec<BigRational>> {
    if n < 2 {
        return Err(invalid(format!("moments of D need n >= 2, got {n}")));
    }
    let denom = n_pow_n(n);
    (1..=n / 2)
        .map(|i| {
            let p = closed_form_pi(n, i)?.eval(&BigInt::from(n));
            Ok(BigRational::new(p, denom.clone()))
        })
        .collect()
}

/// `E[D] = floor(n/2) - sum_i P_i(n) / n^n`.
pub fn expected_d(n: usize) -> Result<BigRational> {
    let ps = zero_free_probabilities(n)?;
    let half = BigRational::from_integer(BigInt::from(n / 2));
    Ok(ps.iter().fold(half, |acc, p| acc - p))
}

pub fn variance_d(n: usize) -> Result<BigRational> {
    variance_d_with_limit(n, DEFAULT_CHROMATIC_LIMIT)
}

/// `Var[D] = sum_i (p_i - p_i^2) + 2 sum_{i<j} (P_{i,j}(n)/n^n - p_i p_j)`
/// over `1 <= i < j <= n/2`.
pub fn variance_d_with_limit(n: usize, limit: usize) -> Result<BigRational> {
    let ps = zero_free_probabilities(n)?;
    if n > limit {
        return Err(Error::CapacityExceeded {
            what: "n for exact Var[D]",
            got: n,
            limit,
        });
    }
    let denom = n_pow_n(n);
    let nn = BigInt::from(n);
    let mut var = ps
        .iter()
        .fold(BigRational::zero(), |acc, p| acc + p - p * p);
    let two = BigRational::from_integer(BigInt::from(2));
    for i in 1..=n / 2 {
        for j in i + 1..=n / 2 {
            let pij = chromatic_poly_with_limit(&circulant_graph(n, &[i, j])?, limit)?.eval(&nn);
            let cov = BigRational::new(pij, denom.clone()) - &ps[i - 1] * &ps[j - 1];
            var += &two * cov;
        }
    }
    Ok(var)
}

/// Exact ratio `P_i(n)/n^n` next to its exponential upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioBound {
    pub n: usize,
    pub i: usize,
    /// Cycle length `l_i = n / gcd(n, i)`.
    pub cycle_length: usize,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub ratio: BigRational,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `P_i(n)/n^n <= exp(-1 + n / (2 (n - 1)))` when `l_i = 2` and
/// `<= exp(-1 + n / (3 (n - 1)^2))` when `l_i >= 3`.
pub fn ratio_bound_check(n: usize, i: usize) -> Result<RatioBound> {
    let p = closed_form_pi(n, i)?.eval(&BigInt::from(n));
    let ratio = BigRational::new(p, n_pow_n(n));
    let l = n / n.gcd(&i);
    let nf = n as f64;
    let bound = if l == 2 {
        (-1.0 + 0.5 * (nf / (nf - 1.0))).exp()
    } else {
        (-1.0 + nf / (3.0 * (nf - 1.0).powi(2))).exp()
    };
    let holds = rational_to_f64(&ratio) <= bound;
    Ok(RatioBound {
        n,
        i,
        cycle_length: l,
        ratio,
        bound,
        holds,
    })
}

/// Lower bound on the synchronization probability built from the exact
/// `Var[D]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChromaticBound {
    pub n: usize,
    pub epsilon: f64,
    /// `floor(n/2) (1 - exp(n / (3 (n-1)^2) - 1)) - 1`, a lower bound on `E[D]`.
    pub eta_star: f64,
    pub variance_d: f64,
    /// Reported as computed, including non-positive (vacuous) values.
    pub bound: f64,
}

pub fn sync_probability_bound(n: usize, epsilon: f64) -> Result<ChromaticBound> {
    sync_probability_bound_with_limit(n, epsilon, DEFAULT_CHROMATIC_LIMIT)
}

/// `1 - h exp(-(eps h - 1)^2 / (2n)) - Var[D] / (eps h - 1)^2` with
/// `h = floor(n/2)`, for `eps` in `(0, 1/2 - 1/e)`.
pub fn sync_probability_bound_with_limit(
    n: usize,
    epsilon: f64,
    limit: usize,
) -> Result<ChromaticBound> {
    let upper = 0.5 - (-1.0f64).exp();
    if !(epsilon > 0.0 && epsilon < upper) {
        return Err(invalid(format!(
            "epsilon must lie in (0, {upper:.6}), got {epsilon}"
        )));
    }
    let var = rational_to_f64(&variance_d_with_limit(n, limit)?);
    let nf = n as f64;
    let h = (n / 2) as f64;
    let eta_star = h * (1.0 - (nf / (3.0 * (nf - 1.0).powi(2)) - 1.0).exp()) - 1.0;
    let gap = epsilon * h - 1.0;
    let bound = 1.0 - h * (-(gap * gap) / (2.0 * nf)).exp() - var / (gap * gap);
    Ok(ChromaticBound {
        n,
        epsilon,
        eta_star,
        variance_d: var,
        bound,
    })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
