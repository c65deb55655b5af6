//! The distance matrix `T_b` of a circular mapping and its statistics.
//!
//! Row `i` (for `1 <= i <= n/2`) collects the cyclic distances between the
//! images of states at cyclic distance `i`:
//! `T_b(i, j) = |b_j - b_{(j + i) mod n}|_n` for columns `j = 0..n`.
//! Rows are addressed 1-based as in that formula; storage is row-major with
//! row `i` at offset `(i - 1) * n`.

use serde::{Deserialize, Serialize};

use crate::automaton::{CircularMapping, Dfa, StateSet, Word};
use crate::error::{invalid, Error, Result};

/// `|r|_n = min(r mod n, -r mod n)`.
pub fn cyclic_abs(r: i64, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(invalid("cyclic absolute value needs n >= 1"));
    }
    let m = r.rem_euclid(n as i64) as usize;
    Ok(m.min(n - m))
}

/// Cyclic distance of two residues in `0..n`.
#[inline]
pub fn cyclic_distance(x: usize, y: usize, n: usize) -> usize {
    let d = x.abs_diff(y);
    d.min(n - d)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<usize>,
}

impl DistanceMatrix {
    pub fn build(b: &CircularMapping) -> Result<Self> {
        let n = b.n();
        if n < 2 {
            return Err(invalid(format!("distance matrix needs n >= 2, got {n}")));
        }
        let half = n / 2;
        let v = b.as_slice();
        let mut entries = Vec::with_capacity(half * n);
        for i in 1..=half {
            entries.extend((0..n).map(|j| cyclic_distance(v[j], v[(j + i) % n], n)));
        }
        Ok(DistanceMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of rows, `floor(n / 2)`.
    pub fn rows(&self) -> usize {
        self.n / 2
    }

    /// Row `i`, `1 <= i <= n/2`.
    pub fn row(&self, i: usize) -> &[usize] {
        assert!(
            (1..=self.rows()).contains(&i),
            "row {i} out of range 1..={}",
            self.rows()
        );
        &self.entries[(i - 1) * self.n..i * self.n]
    }

    pub fn entry(&self, i: usize, j: usize) -> usize {
        self.row(i)[j]
    }

    /// Rows `1..=n/2` paired with their index.
    pub fn iter_rows(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.entries
            .chunks(self.n)
            .enumerate()
            .map(|(k, r)| (k + 1, r))
    }
}

/// Row and zero statistics of a [`DistanceMatrix`]. Vectors are indexed by
/// row, so `distinct[0]` is `R_1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub n: usize,
    /// `R_i`: number of distinct entries of row `i`.
    pub distinct: Vec<usize>,
    /// `z_i`: number of zeros in row `i`.
    pub zeros: Vec<usize>,
    /// `D_i`: whether row `i` contains a zero.
    pub zero_rows: Vec<bool>,
    /// `D`: number of rows containing a zero.
    pub d: usize,
    /// `Z0`: number of zero entries.
    pub z0: usize,
    /// `Z1`: number of unordered pairs of zeros sharing a row.
    pub z1: usize,
}

/// Membership of a mapping in the row-diversity and zero-row events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Events {
    /// Every row has at least `alpha * floor(n/2)` distinct entries.
    pub row: bool,
    /// At least `beta * floor(n/2)` rows contain a zero.
    pub zero: bool,
}

impl MatrixStats {
    pub fn analyze(t: &DistanceMatrix) -> Self {
        let half = t.rows();
        let mut stamp = vec![usize::MAX; half + 1];
        let mut distinct = Vec::with_capacity(half);
        let mut zeros = Vec::with_capacity(half);
        for (i, row) in t.iter_rows() {
            let mut count = 0;
            let mut z = 0;
            for &v in row {
                if stamp[v] != i {
                    stamp[v] = i;
                    count += 1;
                }
                z += usize::from(v == 0);
            }
            distinct.push(count);
            zeros.push(z);
        }
        let zero_rows: Vec<bool> = zeros.iter().map(|&z| z > 0).collect();
        MatrixStats {
            n: t.n(),
            d: zero_rows.iter().filter(|&&x| x).count(),
            z0: zeros.iter().sum(),
            z1: zeros.iter().map(|&z| z * z.saturating_sub(1) / 2).sum(),
            distinct,
            zeros,
            zero_rows,
        }
    }

    pub fn of_mapping(b: &CircularMapping) -> Result<Self> {
        Ok(Self::analyze(&DistanceMatrix::build(b)?))
    }

    pub fn rows(&self) -> usize {
        self.distinct.len()
    }

    pub fn min_distinct(&self) -> usize {
        self.distinct.iter().copied().min().unwrap_or(0)
    }

    /// `sum_i max(z_i - 1, 0)`, so that `D = Z0 - excess_zeros()`.
    pub fn excess_zeros(&self) -> usize {
        self.zeros.iter().map(|&z| z.saturating_sub(1)).sum()
    }

    /// `Z0 - Z1` as a signed value.
    pub fn z0_minus_z1(&self) -> i64 {
        self.z0 as i64 - self.z1 as i64
    }

    pub fn events(&self, alpha: f64, beta: f64) -> Result<Events> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        let half = self.rows() as f64;
        Ok(Events {
            row: self.min_distinct() as f64 >= alpha * half,
            zero: self.d as f64 >= beta * half,
        })
    }

    /// Checks the identities tying `D`, `Z0` and `Z1` together.
    pub fn check_identities(&self) -> Result<()> {
        if self.d + self.excess_zeros() != self.z0 {
            return Err(Error::Internal(format!(
                "D = {} but Z0 - sum max(z_i - 1, 0) = {}",
                self.d,
                self.z0 as i64 - self.excess_zeros() as i64
            )));
        }
        if (self.d as i64) < self.z0_minus_z1() {
            return Err(Error::Internal(format!(
                "D = {} below Z0 - Z1 = {}",
                self.d,
                self.z0_minus_z1()
            )));
        }
        Ok(())
    }
}

/// How every pair at a given cyclic distance is merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowPlan {
    /// `T(i, column) = 0`: shift the pair onto `{column, column + i}` and
    /// apply `b`.
    OneStep { column: usize },
    /// `T(i, column) = distance` and `T(distance, zero_column) = 0`: one
    /// step lands on a pair at `distance`, which then merges in one step.
    TwoStep {
        column: usize,
        distance: usize,
        zero_column: usize,
    },
}

/// A plan for every distance `1..=n/2`; `plans[i - 1]` covers distance `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncCertificate {
    pub n: usize,
    pub plans: Vec<RowPlan>,
}

impl SyncCertificate {
    /// Finds a plan for every row, preferring one-step plans and the
    /// smallest column.
    pub fn find(t: &DistanceMatrix) -> Option<Self> {
        let first_zero: Vec<Option<usize>> = std::iter::once(None)
            .chain(t.iter_rows().map(|(_, r)| r.iter().position(|&v| v == 0)))
            .collect();
        let plans = t
            .iter_rows()
            .map(|(i, row)| match first_zero[i] {
                Some(column) => Some(RowPlan::OneStep { column }),
                None => row.iter().enumerate().find_map(|(column, &distance)| {
                    first_zero[distance].map(|zero_column| RowPlan::TwoStep {
                        column,
                        distance,
                        zero_column,
                    })
                }),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(SyncCertificate { n: t.n(), plans })
    }

    /// Checks every referenced entry against `t`.
    pub fn verify(&self, t: &DistanceMatrix) -> bool {
        self.n == t.n()
            && self.plans.len() == t.rows()
            && self.plans.iter().enumerate().all(|(k, plan)| {
                let i = k + 1;
                match *plan {
                    RowPlan::OneStep { column } => column < t.n() && t.entry(i, column) == 0,
                    RowPlan::TwoStep {
                        column,
                        distance,
                        zero_column,
                    } => {
                        column < t.n()
                            && zero_column < t.n()
                            && distance >= 1
                            && t.entry(i, column) == distance
                            && t.entry(distance, zero_column) == 0
                    }
                }
            })
    }

    /// Builds a reset word for `A_n(b)`: repeatedly merge the two smallest
    /// states of the current set along the plan for their distance. The
    /// result is checked before it is returned.
    pub fn reset_word(&self, b: &CircularMapping) -> Result<Word> {
        let n = b.n();
        let t = DistanceMatrix::build(b)?;
        if !self.verify(&t) {
            return Err(Error::Internal(format!(
                "certificate does not match mapping {b}"
            )));
        }
        let dfa = Dfa::circular(b);
        let mut current = StateSet::full(n);
        let mut word = Word::default();
        while current.len() > 1 {
            let (x, y) = {
                let mut it = current.iter();
                (it.next().unwrap(), it.next().unwrap())
            };
            let piece = self.merge_pair(b, x, y);
            let next = dfa.apply_word(&current, &piece)?;
            if next.len() >= current.len() {
                return Err(Error::Internal(format!(
                    "plan for pair {{{x}, {y}}} did not merge it"
                )));
            }
            current = next;
            word.extend_from(&piece);
        }
        if !dfa.is_reset_word(&word)? {
            return Err(Error::Internal("constructed word does not reset".into()));
        }
        Ok(word)
    }

    fn merge_pair(&self, b: &CircularMapping, x: usize, y: usize) -> Word {
        let n = b.n();
        let (base, i) = oriented(x, y, n);
        let mut word = Word::default();
        match self.plans[i - 1] {
            RowPlan::OneStep { column } => {
                word.push_power(0, (column + n - base) % n);
                word.push(1);
            }
            RowPlan::TwoStep {
                column,
                zero_column,
                ..
            } => {
                word.push_power(0, (column + n - base) % n);
                word.push(1);
                let (base2, _) = oriented(b.at(column), b.at(column + i), n);
                word.push_power(0, (zero_column + n - base2) % n);
                word.push(1);
            }
        }
        word
    }
}

/// Returns `(base, i)` with `{x, y} = {base, base + i mod n}` and
/// `i = |x - y|_n`.
fn oriented(x: usize, y: usize, n: usize) -> (usize, usize) {
    let i = cyclic_distance(x, y, n);
    if (x + i) % n == y {
        (x, i)
    } else {
        (y, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping(b: &[usize]) -> CircularMapping {
        CircularMapping::new(b.to_vec()).unwrap()
    }

    /// Entry straight from the definition via `cyclic_abs` on signed values.
    fn definition_entry(b: &CircularMapping, i: usize, j: usize) -> usize {
        let n = b.n();
        cyclic_abs(b.at(j) as i64 - b.at(j + i) as i64, n).unwrap()
    }

    #[test]
    fn cyclic_abs_examples() {
        assert_eq!(cyclic_abs(7, 10).unwrap(), 3);
        assert_eq!(cyclic_abs(0, 9).unwrap(), 0);
        assert_eq!(cyclic_abs(5, 10).unwrap(), 5);
        assert_eq!(cyclic_abs(-7, 10).unwrap(), 3);
        assert!(cyclic_abs(3, 0).is_err());
    }

    #[test]
    fn build_examples() {
        let t = DistanceMatrix::build(&CircularMapping::identity(4).unwrap()).unwrap();
        assert_eq!(t.row(1), &[1, 1, 1, 1]);
        assert_eq!(t.row(2), &[2, 2, 2, 2]);
        let t = DistanceMatrix::build(&CircularMapping::constant(5, 3).unwrap()).unwrap();
        assert_eq!(t.row(1), &[0; 5]);
        assert_eq!(t.row(2), &[0; 5]);
        let b = mapping(&[0, 0, 2, 2]);
        let t = DistanceMatrix::build(&b).unwrap();
        assert_eq!(t.row(1), &[0, 2, 0, 2]);
        assert_eq!(t.row(2), &[2, 2, 2, 2]);
        for i in 1..=2 {
            for j in 0..4 {
                assert_eq!(t.entry(i, j), definition_entry(&b, i, j));
            }
        }
        assert!(DistanceMatrix::build(&mapping(&[0])).is_err());
    }

    #[test]
    fn analyze_examples() {
        let s = MatrixStats::of_mapping(&CircularMapping::constant(5, 0).unwrap()).unwrap();
        assert_eq!(
            (s.distinct.clone(), s.zeros.clone()),
            (vec![1, 1], vec![5, 5])
        );
        assert_eq!((s.d, s.z0, s.z1), (2, 10, 20));
        let s = MatrixStats::of_mapping(&CircularMapping::identity(4).unwrap()).unwrap();
        assert_eq!(
            (s.distinct.clone(), s.zeros.clone()),
            (vec![1, 1], vec![0, 0])
        );
        assert_eq!((s.d, s.z0, s.z1), (0, 0, 0));
        let s = MatrixStats::of_mapping(&mapping(&[0, 0, 2, 2])).unwrap();
        assert_eq!(
            (s.distinct.clone(), s.zeros.clone()),
            (vec![2, 1], vec![2, 0])
        );
        assert_eq!((s.d, s.z0, s.z1), (1, 2, 1));
        assert_eq!(s.z0 - s.excess_zeros(), 1);
        s.check_identities().unwrap();
    }

    #[test]
    fn event_examples() {
        let s = MatrixStats::of_mapping(&CircularMapping::constant(5, 0).unwrap()).unwrap();
        assert_eq!(
            s.events(0.582, 0.45).unwrap(),
            Events {
                row: false,
                zero: true
            }
        );
        let s = MatrixStats::of_mapping(&CircularMapping::identity(4).unwrap()).unwrap();
        assert_eq!(
            s.events(0.5, 0.1).unwrap(),
            Events {
                row: true,
                zero: false
            }
        );
        assert_eq!(
            s.events(0.51, 0.1).unwrap(),
            Events {
                row: false,
                zero: false
            }
        );
        assert!(s.events(0.0, 0.5).is_err());
        assert!(s.events(0.5, 1.5).is_err());
        // Boundary: both rows hold two distinct values, one of them zero.
        let s = MatrixStats::of_mapping(&mapping(&[0, 0, 0, 1])).unwrap();
        assert_eq!(s.distinct, vec![2, 2]);
        assert_eq!(s.d, 2);
        assert_eq!(
            s.events(1.0, 1.0).unwrap(),
            Events {
                row: true,
                zero: true
            }
        );
    }

    #[test]
    fn certificate_examples() {
        let b = CircularMapping::constant(5, 0).unwrap();
        let t = DistanceMatrix::build(&b).unwrap();
        let cert = SyncCertificate::find(&t).unwrap();
        assert!(cert
            .plans
            .iter()
            .all(|p| matches!(p, RowPlan::OneStep { column: 0 })));
        assert_eq!(cert.reset_word(&b).unwrap(), Word(vec![1]));

        let t = DistanceMatrix::build(&CircularMapping::identity(4).unwrap()).unwrap();
        assert_eq!(SyncCertificate::find(&t), None);
        let t = DistanceMatrix::build(&mapping(&[0, 0, 2, 2])).unwrap();
        assert_eq!(SyncCertificate::find(&t), None);
    }

    #[test]
    fn two_step_plan_is_used() {
        // n = 5, b = (0,0,1,3,3): row 1 = (0,1,2,0,2), row 2 = (1,2,2,2,2);
        // row 2 reaches row 1's zero through the entry 1 at column 0.
        let b = mapping(&[0, 0, 1, 3, 3]);
        let t = DistanceMatrix::build(&b).unwrap();
        assert_eq!(t.row(1), &[0, 1, 2, 0, 2]);
        assert_eq!(t.row(2), &[1, 2, 2, 2, 2]);
        let cert = SyncCertificate::find(&t).unwrap();
        assert_eq!(cert.plans[0], RowPlan::OneStep { column: 0 });
        assert_eq!(
            cert.plans[1],
            RowPlan::TwoStep {
                column: 0,
                distance: 1,
                zero_column: 0
            }
        );
        let w = cert.reset_word(&b).unwrap();
        assert!(Dfa::circular(&b).is_reset_word(&w).unwrap());
    }

    #[test]
    fn mismatched_certificate_is_an_internal_error() {
        let b = CircularMapping::constant(5, 0).unwrap();
        let cert = SyncCertificate::find(&DistanceMatrix::build(&b).unwrap()).unwrap();
        let other = CircularMapping::identity(5).unwrap();
        assert!(matches!(cert.reset_word(&other), Err(Error::Internal(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mapping_strategy() -> impl Strategy<Value = CircularMapping> {
            (2usize..=24).prop_flat_map(|n| {
                prop::collection::vec(0..n, n).prop_map(|b| CircularMapping::new(b).unwrap())
            })
        }

        proptest! {
            #[test]
            fn entries_match_definition(b in mapping_strategy()) {
                let t = DistanceMatrix::build(&b).unwrap();
                for (i, row) in t.iter_rows() {
                    for (j, &v) in row.iter().enumerate() {
                        prop_assert_eq!(v, definition_entry(&b, i, j));
                        prop_assert!(v <= b.n() / 2);
                    }
                }
            }

            #[test]
            fn zero_identities(b in mapping_strategy()) {
                let s = MatrixStats::of_mapping(&b).unwrap();
                prop_assert!(s.check_identities().is_ok());
                prop_assert!(s.z1 >= s.excess_zeros());
                prop_assert!(s.d <= b.n() / 2);
                for &r in &s.distinct {
                    prop_assert!(r >= 1 && r <= b.n().min(b.n() / 2 + 1));
                }
            }

            #[test]
            fn pigeonhole_implies_certificate(b in mapping_strategy()) {
                let t = DistanceMatrix::build(&b).unwrap();
                let s = MatrixStats::analyze(&t);
                let half = t.rows();
                let counting = t.iter_rows().all(|(i, _)| {
                    let nonzero = s.distinct[i - 1] - usize::from(s.zeros[i - 1] > 0);
                    nonzero + s.d > half
                });
                if counting {
                    prop_assert!(SyncCertificate::find(&t).is_some());
                }
            }

            #[test]
            fn certificate_sound(b in mapping_strategy()) {
                let t = DistanceMatrix::build(&b).unwrap();
                if let Some(cert) = SyncCertificate::find(&t) {
                    prop_assert!(cert.verify(&t));
                    let dfa = Dfa::circular(&b);
                    prop_assert!(dfa.is_synchronizing());
                    let w = cert.reset_word(&b).unwrap();
                    prop_assert!(dfa.is_reset_word(&w).unwrap());
                }
            }
        }
    }
}
