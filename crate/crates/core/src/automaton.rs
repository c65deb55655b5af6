//! Deterministic automata, word actions and synchronization.
//!
//! States are `0..n`; a letter is a total map on states stored as an image
//! vector. A word acts on subsets left to right: `S(uv) = (Su)v`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default state-count limit for [`Dfa::shortest_reset_word`].
pub const DEFAULT_EXACT_SEARCH_LIMIT: usize = 20;

/// Largest limit accepted by [`Dfa::shortest_reset_word_with_limit`]; the
/// subset search keeps one parent slot per subset.
pub const EXACT_SEARCH_HARD_LIMIT: usize = 28;

const UNSEEN: u32 = u32::MAX;

/// A deterministic finite automaton without initial or final states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dfa {
    n: usize,
    letters: Vec<Vec<usize>>,
}

/// A word over the letters of a [`Dfa`], stored as letter indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

/// A set of states of an `n`-state automaton.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    n: usize,
    bits: Vec<u64>,
}

/// The second letter `b` of a circular automaton `A_n(b)`, as the vector
/// `(b_0, ..., b_{n-1})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircularMapping {
    b: Vec<usize>,
}

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn push(&mut self, letter: usize) {
        self.0.push(letter);
    }

    pub fn extend_from(&mut self, other: &Word) {
        self.0.extend_from_slice(&other.0);
    }

    /// Appends `count` copies of `letter`.
    pub fn push_power(&mut self, letter: usize, count: usize) {
        self.0.extend(std::iter::repeat_n(letter, count));
    }
}

impl fmt::Display for Word {
    /// Letters `0..26` print as `a..z`; larger indices print as `<k>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for &l in &self.0 {
            if l < 26 {
                write!(f, "{}", (b'a' + l as u8) as char)?;
            } else {
                write!(f, "<{l}>")?;
            }
        }
        Ok(())
    }
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet {
            n,
            bits: vec![0; n.div_ceil(64)],
        }
    }

    /// The full state set `Q`.
    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for q in 0..n {
            s.insert(q);
        }
        s
    }

    pub fn singleton(n: usize, q: usize) -> Result<Self> {
        Self::from_states(n, [q])
    }

    pub fn from_states(n: usize, states: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(n);
        for q in states {
            if q >= n {
                return Err(invalid(format!("state {q} out of range for n = {n}")));
            }
            s.insert(q);
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, q: usize) {
        self.bits[q / 64] |= 1 << (q % 64);
    }

    pub fn contains(&self, q: usize) -> bool {
        q < self.n && self.bits[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// States in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + t)
            })
        })
    }

    fn image(&self, letter: &[usize]) -> StateSet {
        let mut out = StateSet::empty(self.n);
        for q in self.iter() {
            out.insert(letter[q]);
        }
        out
    }
}

impl CircularMapping {
    pub fn new(b: Vec<usize>) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(invalid("a circular mapping needs at least one state"));
        }
        if let Some(&v) = b.iter().find(|&&v| v >= n) {
            return Err(invalid(format!(
                "mapping value {v} out of range for n = {n}"
            )));
        }
        Ok(CircularMapping { b })
    }

    pub fn constant(n: usize, value: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.b
    }

    /// `b_j` with `j` taken modulo `n`.
    #[inline]
    pub fn at(&self, j: usize) -> usize {
        self.b[j % self.b.len()]
    }

    pub fn is_permutation(&self) -> bool {
        is_permutation(&self.b)
    }
}

impl fmt::Display for CircularMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.b.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn is_permutation(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    for &v in map {
        if std::mem::replace(&mut seen[v], true) {
            return false;
        }
    }
    true
}

impl Dfa {
    pub fn new(n: usize, letters: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("an automaton needs at least one state"));
        }
        if letters.is_empty() {
            return Err(invalid("an automaton needs at least one letter"));
        }
        for (k, letter) in letters.iter().enumerate() {
            if letter.len() != n {
                return Err(invalid(format!(
                    "letter {k} has {} images, expected {n}",
                    letter.len()
                )));
            }
            if let Some(&v) = letter.iter().find(|&&v| v >= n) {
                return Err(invalid(format!("letter {k} maps to {v}, out of range")));
            }
        }
        Ok(Dfa { n, letters })
    }

    /// The Černý automaton `C_n`: letter 0 is the cyclic shift and letter 1
    /// fixes every state except `n - 1`, which it sends to `0`.
    pub fn cerny(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("Černý automaton needs n >= 2, got {n}")));
        }
        let a = (0..n).map(|i| (i + 1) % n).collect();
        let b = (0..n).map(|i| if i == n - 1 { 0 } else { i }).collect();
        Dfa::new(n, vec![a, b])
    }

    /// The circular automaton `A_n(b)`: letter 0 is the shift `i -> i + 1`,
    /// letter 1 is `b`.
    pub fn circular(b: &CircularMapping) -> Self {
        let n = b.n();
        let a = (0..n).map(|i| (i + 1) % n).collect();
        Dfa {
            n,
            letters: vec![a, b.as_slice().to_vec()],
        }
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, k: usize) -> &[usize] {
        &self.letters[k]
    }

    pub fn letters(&self) -> &[Vec<usize>] {
        &self.letters
    }

    pub fn all_letters_are_permutations(&self) -> bool {
        self.letters.iter().all(|l| is_permutation(l))
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        match w.letters().iter().find(|&&l| l >= self.letters.len()) {
            Some(l) => Err(invalid(format!(
                "letter index {l} out of range for {} letters",
                self.letters.len()
            ))),
            None => Ok(()),
        }
    }

    /// The image `S w` of a nonempty state set.
    pub fn apply_word(&self, s: &StateSet, w: &Word) -> Result<StateSet> {
        if s.universe() != self.n {
            return Err(invalid(format!(
                "state set over {} states applied to a {}-state automaton",
                s.universe(),
                self.n
            )));
        }
        if s.is_empty() {
            return Err(invalid("word action on the empty set"));
        }
        self.check_word(w)?;
        Ok(w.letters()
            .iter()
            .fold(s.clone(), |set, &l| set.image(&self.letters[l])))
    }

    /// True iff `w` sends every state to one common state.
    pub fn is_reset_word(&self, w: &Word) -> Result<bool> {
        Ok(self.apply_word(&StateSet::full(self.n), w)?.len() == 1)
    }

    /// Pair-automaton test: the automaton synchronizes iff every pair of
    /// states can be merged.
    pub fn is_synchronizing(&self) -> bool {
        PairDistances::compute(self).all_mergeable()
    }

    /// Minimal-length reset word by breadth-first search over subsets,
    /// refusing automata with more than [`DEFAULT_EXACT_SEARCH_LIMIT`] states.
    pub fn shortest_reset_word(&self) -> Result<Option<Word>> {
        self.shortest_reset_word_with_limit(DEFAULT_EXACT_SEARCH_LIMIT)
    }

    /// As [`Dfa::shortest_reset_word`] with an explicit state-count limit.
    ///
    /// Letters are tried in index order from the full set, and the first
    /// singleton reached wins, so among the minimal words the one returned is
    /// the first discovered.
    pub fn shortest_reset_word_with_limit(&self, limit: usize) -> Result<Option<Word>> {
        let limit = limit.min(EXACT_SEARCH_HARD_LIMIT);
        if self.n > limit {
            return Err(Error::CapacityExceeded {
                what: "state count for exact reset-word search",
                got: self.n,
                limit,
            });
        }
        if self.n == 1 {
            return Ok(Some(Word::default()));
        }
        let tables: Vec<ByteImageTable> = self
            .letters
            .iter()
            .map(|l| ByteImageTable::new(l))
            .collect();
        let full: u32 = (1u32 << self.n) - 1;
        let mut parent = vec![UNSEEN; 1usize << self.n];
        let mut via = vec![0u8; 1usize << self.n];
        parent[full as usize] = full;
        let mut queue = VecDeque::from([full]);
        while let Some(set) = queue.pop_front() {
            for (k, table) in tables.iter().enumerate() {
                let next = table.image(set);
                if parent[next as usize] != UNSEEN {
                    continue;
                }
                parent[next as usize] = set;
                via[next as usize] = k as u8;
                if next.count_ones() == 1 {
                    let mut letters = Vec::new();
                    let mut cur = next;
                    while cur != full {
                        letters.push(via[cur as usize] as usize);
                        cur = parent[cur as usize];
                    }
                    letters.reverse();
                    return Ok(Some(Word(letters)));
                }
                queue.push_back(next);
            }
        }
        Ok(None)
    }

    /// Reset word built by repeatedly merging the two smallest states of the
    /// current set with a shortest pair-merging word. Not minimal in general.
    pub fn greedy_reset_word(&self) -> Option<Word> {
        let pairs = PairDistances::compute(self);
        if !pairs.all_mergeable() {
            return None;
        }
        let mut current = StateSet::full(self.n);
        let mut word = Word::default();
        while current.len() > 1 {
            let (p, q) = {
                let mut it = current.iter();
                (it.next()?, it.next()?)
            };
            let piece = pairs.merging_word(self, p, q)?;
            current = self.apply_word(&current, &piece).ok()?;
            word.extend_from(&piece);
        }
        debug_assert!(self.is_reset_word(&word).unwrap_or(false));
        Some(word)
    }

    /// Shortest word merging states `p` and `q`, or `None` if they never merge.
    pub fn shortest_merging_word(&self, p: usize, q: usize) -> Result<Option<Word>> {
        if p >= self.n || q >= self.n {
            return Err(invalid("state out of range"));
        }
        if p == q {
            return Ok(Some(Word::default()));
        }
        Ok(PairDistances::compute(self).merging_word(self, p, q))
    }
}

/// Per-letter lookup of subset images, one 256-entry table per byte of the
/// state mask.
struct ByteImageTable {
    chunks: Vec<[u32; 256]>,
}

impl ByteImageTable {
    fn new(letter: &[usize]) -> Self {
        let chunks = letter
            .chunks(8)
            .map(|chunk| {
                let mut table = [0u32; 256];
                for (byte, slot) in table.iter_mut().enumerate() {
                    for (bit, &target) in chunk.iter().enumerate() {
                        if byte >> bit & 1 == 1 {
                            *slot |= 1 << target;
                        }
                    }
                }
                table
            })
            .collect();
        ByteImageTable { chunks }
    }

    #[inline]
    fn image(&self, set: u32) -> u32 {
        self.chunks.iter().enumerate().fold(0, |acc, (c, table)| {
            acc | table[(set >> (8 * c) & 0xff) as usize]
        })
    }
}

/// Index of the unordered pair `{p, q}`, `p != q`.
#[inline]
fn pair_index(p: usize, q: usize) -> usize {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    hi * (hi - 1) / 2 + lo
}

/// Distance from every unordered pair to a singleton in the pair automaton,
/// computed by backward breadth-first search from the singletons.
pub(crate) struct PairDistances {
    dist: Vec<u32>,
}

impl PairDistances {
    pub(crate) fn compute(dfa: &Dfa) -> Self {
        let n = dfa.n;
        let mut dist = vec![UNSEEN; n * n.saturating_sub(1) / 2];
        let mut queue = VecDeque::new();
        let preimages: Vec<Preimages> = dfa.letters.iter().map(|l| Preimages::new(l)).collect();
        for pre in &preimages {
            for s in 0..n {
                let block = pre.of(s);
                for (x, &p) in block.iter().enumerate() {
                    for &q in &block[x + 1..] {
                        let idx = pair_index(p, q);
                        if dist[idx] == UNSEEN {
                            dist[idx] = 1;
                            queue.push_back((p, q));
                        }
                    }
                }
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            let d = dist[pair_index(p, q)];
            for pre in &preimages {
                for &pp in pre.of(p) {
                    for &qq in pre.of(q) {
                        // pp == qq would need a letter sending one state to both p and q
                        let idx = pair_index(pp, qq);
                        if dist[idx] == UNSEEN {
                            dist[idx] = d + 1;
                            queue.push_back((pp, qq));
                        }
                    }
                }
            }
        }
        PairDistances { dist }
    }

    pub(crate) fn all_mergeable(&self) -> bool {
        self.dist.iter().all(|&d| d != UNSEEN)
    }

    /// Walks down the distance layers, choosing the lowest-index letter that
    /// makes progress at every step.
    fn merging_word(&self, dfa: &Dfa, p: usize, q: usize) -> Option<Word> {
        let (mut p, mut q) = (p, q);
        let mut d = self.dist[pair_index(p, q)];
        if d == UNSEEN {
            return None;
        }
        let mut word = Word::default();
        while d > 0 {
            let (k, np, nq) = dfa.letters.iter().enumerate().find_map(|(k, l)| {
                let (np, nq) = (l[p], l[q]);
                let ok = if np == nq {
                    d == 1
                } else {
                    self.dist[pair_index(np, nq)] == d - 1
                };
                ok.then_some((k, np, nq))
            })?;
            word.push(k);
            p = np;
            q = nq;
            d -= 1;
        }
        Some(word)
    }
}

/// Inverse of one letter in compressed-row form.
struct Preimages {
    offsets: Vec<usize>,
    sources: Vec<usize>,
}

impl Preimages {
    fn new(letter: &[usize]) -> Self {
        let n = letter.len();
        let mut offsets = vec![0usize; n + 1];
        for &t in letter {
            offsets[t + 1] += 1;
        }
        for s in 0..n {
            offsets[s + 1] += offsets[s];
        }
        let mut fill = offsets.clone();
        let mut sources = vec![0usize; n];
        for (src, &t) in letter.iter().enumerate() {
            sources[fill[t]] = src;
            fill[t] += 1;
        }
        Preimages { offsets, sources }
    }

    #[inline]
    fn of(&self, s: usize) -> &[usize] {
        &self.sources[self.offsets[s]..self.offsets[s + 1]]
    }
}
