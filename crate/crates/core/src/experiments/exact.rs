//! Exhaustive enumeration of all `n^n` mappings at small `n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::{evaluate, Exhaustive, MappingSource};
use crate::automaton::Dfa;
use crate::error::{invalid, Error, Result};
use crate::matrix::{DistanceMatrix, MatrixStats, SyncCertificate};

/// Largest `n` accepted by [`enumerate_exact`] (`6^6 = 46656` mappings).
pub const DEFAULT_ENUMERATION_LIMIT: usize = 6;

/// Largest `n` accepted by the synchronization-only count (`7^7 = 823543`).
pub const SYNC_COUNT_LIMIT: usize = 7;

/// Exact statistics over every mapping of `Z_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactStats {
    pub n: usize,
    pub total: u64,
    pub sync_count: u64,
    pub certificate_count: u64,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub mean_d: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub var_d: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub mean_z0: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub var_z0: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub mean_z1: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub var_z1: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub mean_z0_minus_z1: BigRational,
    /// `E[R_i]` for `i = 1..=n/2`.
    #[serde(serialize_with = "crate::ratio::serialize_vec")]
    pub mean_r: Vec<BigRational>,
    /// `d_distribution[k]` mappings have `D = k`.
    pub d_distribution: Vec<u64>,
}

fn check_range(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("enumeration needs n >= 2, got {n}")));
    }
    if n > limit {
        return Err(Error::CapacityExceeded {
            what,
            got: n,
            limit,
        });
    }
    Ok(())
}

/// Sum and sum of squares of an integer statistic over all mappings.
#[derive(Default)]
struct Sums {
    sum: i128,
    sum_sq: i128,
}

impl Sums {
    fn push(&mut self, x: i64) {
        self.sum += x as i128;
        self.sum_sq += (x as i128) * (x as i128);
    }

    fn mean(&self, total: u64) -> BigRational {
        BigRational::new(BigInt::from(self.sum), BigInt::from(total))
    }

    /// Population variance `E[X^2] - E[X]^2`.
    fn variance(&self, total: u64) -> BigRational {
        let m = self.mean(total);
        BigRational::new(BigInt::from(self.sum_sq), BigInt::from(total)) - &m * &m
    }
}

struct Row {
    synchronizing: bool,
    certificate: bool,
    d: usize,
    z0: usize,
    z1: usize,
    distinct: Vec<usize>,
}

pub fn enumerate_exact(n: usize) -> Result<ExactStats> {
    enumerate_exact_with_limit(n, DEFAULT_ENUMERATION_LIMIT, 0)
}

/// Enumerates all `n^n` mappings on `threads` workers (`0` for rayon's
/// default). Aggregation is serial and exact.
pub fn enumerate_exact_with_limit(n: usize, limit: usize, threads: usize) -> Result<ExactStats> {
    check_range(n, limit, "n for exhaustive enumeration")?;
    let source = Exhaustive { n };
    let rows = evaluate(&source, threads, |_, b| {
        let t = DistanceMatrix::build(b)?;
        let stats = MatrixStats::analyze(&t);
        stats.check_identities()?;
        let synchronizing = Dfa::circular(b).is_synchronizing();
        let certificate = SyncCertificate::find(&t).is_some();
        if certificate && !synchronizing {
            return Err(Error::Internal(format!(
                "certificate found for non-synchronizing mapping {b}"
            )));
        }
        Ok(Row {
            synchronizing,
            certificate,
            d: stats.d,
            z0: stats.z0,
            z1: stats.z1,
            distinct: stats.distinct,
        })
    })?;

    let total = source.len();
    let h = n / 2;
    let (mut d, mut z0, mut z1, mut gap) = Default::default();
    let mut r_sums = vec![0u64; h];
    let mut d_distribution = vec![0u64; h + 1];
    let (mut sync_count, mut certificate_count) = (0u64, 0u64);
    for row in &rows {
        sync_count += row.synchronizing as u64;
        certificate_count += row.certificate as u64;
        Sums::push(&mut d, row.d as i64);
        Sums::push(&mut z0, row.z0 as i64);
        Sums::push(&mut z1, row.z1 as i64);
        Sums::push(&mut gap, row.z0 as i64 - row.z1 as i64);
        d_distribution[row.d] += 1;
        for (acc, r) in r_sums.iter_mut().zip(&row.distinct) {
            *acc += *r as u64;
        }
    }
    Ok(ExactStats {
        n,
        total,
        sync_count,
        certificate_count,
        mean_d: d.mean(total),
        var_d: d.variance(total),
        mean_z0: z0.mean(total),
        var_z0: z0.variance(total),
        mean_z1: z1.mean(total),
        var_z1: z1.variance(total),
        mean_z0_minus_z1: gap.mean(total),
        mean_r: r_sums
            .iter()
            .map(|&s| BigRational::new(BigInt::from(s), BigInt::from(total)))
            .collect(),
        d_distribution,
    })
}

/// Number of synchronizing `A_n(b)` and number of non-permutation `b` over
/// all mappings, for `2 <= n <= 7`.
pub fn count_synchronizing(n: usize, threads: usize) -> Result<(u64, u64, u64)> {
    check_range(n, SYNC_COUNT_LIMIT, "n for synchronizing count")?;
    let source = Exhaustive { n };
    let flags = evaluate(&source, threads, |_, b| {
        Ok((Dfa::circular(b).is_synchronizing(), !b.is_permutation()))
    })?;
    let sync = flags.iter().filter(|f| f.0).count() as u64;
    let non_perm = flags.iter().filter(|f| f.1).count() as u64;
    let agree = flags.iter().filter(|f| f.0 == f.1).count() as u64;
    Ok((sync, non_perm, agree))
}

pub fn is_prime(n: usize) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `1 - p!/p^p`.
pub fn prime_formula(p: usize) -> Result<BigRational> {
    if !is_prime(p) {
        return Err(invalid(format!("{p} is not prime")));
    }
    let pp = BigInt::from(p).pow(p as u32);
    Ok(BigRational::one() - BigRational::new(factorial(p), pp))
}

/// Exhaustive check of the prime-order criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeReport {
    pub p: usize,
    pub total: u64,
    pub sync_count: u64,
    /// `p^p - p!`.
    pub expected_sync_count: u64,
    pub non_permutation_count: u64,
    /// Synchronizing exactly when `b` is not a permutation, on every mapping.
    pub criterion_holds: bool,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub formula: BigRational,
    #[serde(serialize_with = "crate::ratio::serialize")]
    pub empirical: BigRational,
}

pub fn prime_criterion_report(p: usize, threads: usize) -> Result<PrimeReport> {
    let formula = prime_formula(p)?;
    let (sync_count, non_permutation_count, agree) = count_synchronizing(p, threads)?;
    let total = (p as u64).pow(p as u32);
    let perms = (1..=p as u64).product::<u64>();
    Ok(PrimeReport {
        p,
        total,
        sync_count,
        expected_sync_count: total - perms,
        non_permutation_count,
        criterion_holds: agree == total,
        formula,
        empirical: BigRational::new(BigInt::from(sync_count), BigInt::from(total)),
    })
}

pub fn prime_criterion_check(p: usize) -> Result<bool> {
    Ok(prime_criterion_report(p, 0)?.criterion_holds)
}
