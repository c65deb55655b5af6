//! Seeded Monte Carlo and exhaustive experiments over uniform mappings.
//!
//! Every experiment evaluates a [`MappingSource`] index by index. Per-index
//! work runs on a rayon pool of the requested size, results are collected in
//! index order, and all aggregation is done serially with exact integer
//! sums, so outputs do not depend on the worker count.

mod exact;
mod rng;
mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{CircularMapping, Dfa};
use crate::error::{invalid, Error, Result};
use crate::matrix::{DistanceMatrix, MatrixStats, SyncCertificate};

pub use exact::{
    count_synchronizing, enumerate_exact, enumerate_exact_with_limit, is_prime,
    prime_criterion_check, prime_criterion_report, prime_formula, ExactStats, PrimeReport,
    DEFAULT_ENUMERATION_LIMIT, SYNC_COUNT_LIMIT,
};
pub use rng::{sample_mapping, RngStream};
pub use stats::{non_increasing_within_ci, IntTally, Moments, Proportion, Z_95};

/// `1 - 1/e`, the limiting fraction of distinct values per row.
pub fn one_minus_inv_e() -> f64 {
    1.0 - (-1.0f64).exp()
}

/// Parameters of the row-diversity and zero-row events for a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub epsilon: f64,
    /// `1 - 1/e - epsilon`.
    pub alpha: f64,
    /// `1/2 - epsilon`.
    pub beta: f64,
    /// `(epsilon floor(n/2) - 1)^2 / (4n)`.
    pub lambda_eps: f64,
    /// `(epsilon floor(n/2) - 1) / 2`: the deviation allowed to each of `Z0`
    /// and `Z1`.
    pub nu: f64,
    /// `beta floor(n/2)`, which satisfies
    /// `delta = (floor(n/2)/2 - 1) - 2 nu <= E[Z0 - Z1] - 2 nu`.
    pub delta: f64,
}

impl BoundParams {
    pub fn new(n: usize, epsilon: f64) -> Self {
        let h = (n / 2) as f64;
        let gap = epsilon * h - 1.0;
        BoundParams {
            n,
            epsilon,
            alpha: one_minus_inv_e() - epsilon,
            beta: 0.5 - epsilon,
            lambda_eps: gap * gap / (4.0 * n as f64),
            nu: gap / 2.0,
            delta: (0.5 - epsilon) * h,
        }
    }

    /// Union bound `floor(n/2) exp(-2 lambda_eps)` on the probability that
    /// some row has fewer than `alpha floor(n/2)` distinct entries.
    pub fn mcdiarmid_row_bound(&self) -> f64 {
        (self.n / 2) as f64 * (-2.0 * self.lambda_eps).exp()
    }
}

/// Defaults of the trial harness: `epsilon = 0.05`, giving
/// `alpha = 1 - 1/e - 0.05 ≈ 0.582` and `beta = 0.45`.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// A finite, indexable family of mappings.
pub trait MappingSource: Sync {
    fn n(&self) -> usize;
    fn len(&self) -> u64;
    fn mapping(&self, index: u64) -> Result<CircularMapping>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `trials` independent uniform mappings; mapping `t` comes from
/// [`RngStream::new`]`(seed, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededSampler {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
}

impl MappingSource for SeededSampler {
    fn n(&self) -> usize {
        self.n
    }

    fn len(&self) -> u64 {
        self.trials
    }

    fn mapping(&self, index: u64) -> Result<CircularMapping> {
        sample_mapping(&mut RngStream::new(self.seed, index), self.n)
    }
}

/// All `n^n` mappings; index `k` written in base `n` gives `(b_0, ..., b_{n-1})`
/// with `b_0` least significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exhaustive {
    pub n: usize,
}

impl MappingSource for Exhaustive {
    fn n(&self) -> usize {
        self.n
    }

    fn len(&self) -> u64 {
        (self.n as u64).pow(self.n as u32)
    }

    fn mapping(&self, index: u64) -> Result<CircularMapping> {
        let n = self.n as u64;
        let mut k = index;
        CircularMapping::new(
            (0..self.n)
                .map(|_| {
                    let d = k % n;
                    k /= n;
                    d as usize
                })
                .collect(),
        )
    }
}

/// One sampled automaton and its measured statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: u64,
    pub synchronizing: bool,
    pub certificate_present: bool,
    pub d: usize,
    pub z0: usize,
    pub z1: usize,
    pub min_r: usize,
    pub in_e_row: bool,
    pub in_e_zero: bool,
}

/// A record plus the per-row distinct counts, kept out of the record so it
/// stays a fixed-width table row.
#[derive(Debug, Clone)]
pub struct Sample {
    pub record: TrialRecord,
    pub distinct: Vec<usize>,
    pub excess_zeros: usize,
}

/// Measures one mapping and enforces the per-record invariants.
pub fn measure(b: &CircularMapping, trial: u64, alpha: f64, beta: f64) -> Result<Sample> {
    let n = b.n();
    let synchronizing = Dfa::circular(b).is_synchronizing();
    if n == 1 {
        // no rows: every row condition holds vacuously
        return Ok(Sample {
            record: TrialRecord {
                n,
                trial,
                synchronizing,
                certificate_present: true,
                d: 0,
                z0: 0,
                z1: 0,
                min_r: 0,
                in_e_row: true,
                in_e_zero: true,
            },
            distinct: Vec::new(),
            excess_zeros: 0,
        });
    }
    let t = DistanceMatrix::build(b)?;
    let stats = MatrixStats::analyze(&t);
    stats.check_identities()?;
    let events = stats.events(alpha, beta)?;
    let certificate_present = SyncCertificate::find(&t).is_some();
    if certificate_present && !synchronizing {
        return Err(Error::Internal(format!(
            "certificate found for non-synchronizing mapping {b}"
        )));
    }
    Ok(Sample {
        record: TrialRecord {
            n,
            trial,
            synchronizing,
            certificate_present,
            d: stats.d,
            z0: stats.z0,
            z1: stats.z1,
            min_r: stats.min_distinct(),
            in_e_row: events.row,
            in_e_zero: events.zero,
        },
        excess_zeros: stats.excess_zeros(),
        distinct: stats.distinct,
    })
}

/// Runs `f` over every index of `source` on a pool of `threads` workers
/// (`0` means rayon's default) and returns the results in index order.
pub fn evaluate<S, T, F>(source: &S, threads: usize, f: F) -> Result<Vec<T>>
where
    S: MappingSource + ?Sized,
    T: Send,
    F: Fn(u64, &CircularMapping) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..source.len())
            .into_par_iter()
            .map(|k| f(k, &source.mapping(k)?))
            .collect()
    })
}

pub fn collect_samples<S: MappingSource + ?Sized>(
    source: &S,
    alpha: f64,
    beta: f64,
    threads: usize,
) -> Result<Vec<Sample>> {
    evaluate(source, threads, |k, b| measure(b, k, alpha, beta))
}

/// Seeded Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(n: usize, trials: u64, seed: u64) -> Self {
        let p = BoundParams::new(n, DEFAULT_EPSILON);
        ExperimentConfig {
            n,
            trials,
            seed,
            alpha: p.alpha,
            beta: p.beta,
            threads: 1,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_events(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn sampler(&self) -> SeededSampler {
        SeededSampler {
            n: self.n,
            trials: self.trials,
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        Ok(())
    }
}

/// Aggregated estimates over a set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub trials: u64,
    pub alpha: f64,
    pub beta: f64,
    pub synchronizing: Proportion,
    pub certificate: Proportion,
    pub in_e_row: Proportion,
    pub in_e_zero: Proportion,
    pub d: Moments,
    pub z0: Moments,
    pub z1: Moments,
    pub z0_minus_z1: Moments,
    pub min_r: Moments,
    /// Moments of `R_i`, `row_distinct[i - 1]` for row `i`.
    pub row_distinct: Vec<Moments>,
}

impl Summary {
    pub fn from_samples(n: usize, alpha: f64, beta: f64, samples: &[Sample]) -> Self {
        let count = |pred: fn(&TrialRecord) -> bool| {
            samples.iter().filter(|s| pred(&s.record)).count() as u64
        };
        let trials = samples.len() as u64;
        let tally = |get: &dyn Fn(&Sample) -> i64| {
            let mut t = IntTally::default();
            samples.iter().for_each(|s| t.push(get(s)));
            t.moments()
        };
        let row_distinct = (0..n / 2)
            .map(|r| tally(&|s: &Sample| s.distinct[r] as i64))
            .collect();
        Summary {
            n,
            trials,
            alpha,
            beta,
            synchronizing: Proportion::wilson(count(|r| r.synchronizing), trials),
            certificate: Proportion::wilson(count(|r| r.certificate_present), trials),
            in_e_row: Proportion::wilson(count(|r| r.in_e_row), trials),
            in_e_zero: Proportion::wilson(count(|r| r.in_e_zero), trials),
            d: tally(&|s| s.record.d as i64),
            z0: tally(&|s| s.record.z0 as i64),
            z1: tally(&|s| s.record.z1 as i64),
            z0_minus_z1: tally(&|s| s.record.z0 as i64 - s.record.z1 as i64),
            min_r: tally(&|s| s.record.min_r as i64),
            row_distinct,
        }
    }
}

/// Records and summary of one seeded run.
#[derive(Debug, Clone)]
pub struct Run {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Run> {
    cfg.validate()?;
    let samples = collect_samples(&cfg.sampler(), cfg.alpha, cfg.beta, cfg.threads)?;
    let summary = Summary::from_samples(cfg.n, cfg.alpha, cfg.beta, &samples);
    Ok(Run {
        records: samples.into_iter().map(|s| s.record).collect(),
        summary,
    })
}

/// Fraction of sampled `A_n(b)` that synchronize, with its Wilson interval
/// in `summary.synchronizing`.
pub fn estimate_sync_prob(cfg: &ExperimentConfig) -> Result<Summary> {
    Ok(run(cfg)?.summary)
}

/// Row-diversity experiment at `alpha = 1 - 1/e - epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRowResult {
    pub n: usize,
    pub trials: u64,
    pub params: BoundParams,
    /// Frequency of "some row has fewer than `alpha floor(n/2)` distinct
    /// entries".
    pub failure: Proportion,
    /// The union bound, reported even when it exceeds one.
    pub mcdiarmid_value: f64,
}

pub fn lemma_row_experiment(
    n: usize,
    trials: u64,
    epsilon: f64,
    seed: u64,
    threads: usize,
) -> Result<LemmaRowResult> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if n as f64 <= 2.0 / epsilon {
        return Err(invalid(format!(
            "row experiment needs n > 2/epsilon = {}, got n = {n}",
            2.0 / epsilon
        )));
    }
    let params = BoundParams::new(n, epsilon);
    let source = SeededSampler { n, trials, seed };
    lemma_row_on(&source, params, threads)
}

pub fn lemma_row_on<S: MappingSource + ?Sized>(
    source: &S,
    params: BoundParams,
    threads: usize,
) -> Result<LemmaRowResult> {
    // beta only feeds the zero event, which this experiment ignores
    let samples = collect_samples(source, params.alpha, 1.0, threads)?;
    let failures = samples.iter().filter(|s| !s.record.in_e_row).count() as u64;
    Ok(LemmaRowResult {
        n: source.n(),
        trials: samples.len() as u64,
        params,
        failure: Proportion::wilson(failures, samples.len() as u64),
        mcdiarmid_value: params.mcdiarmid_row_bound(),
    })
}

/// Zero-row experiment at `beta = 1/2 - epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaZeroResult {
    pub n: usize,
    pub trials: u64,
    pub params: BoundParams,
    /// Frequency of `D < beta floor(n/2)`.
    pub failure: Proportion,
    pub d: Moments,
    pub z0: Moments,
    pub z1: Moments,
    /// `(Var Z0 + Var Z1) / nu^2` from the sample variances; meaningful only
    /// when `nu > 0`.
    pub chebyshev_value: f64,
}

pub fn lemma_zero_experiment(
    n: usize,
    trials: u64,
    epsilon: f64,
    seed: u64,
    threads: usize,
) -> Result<LemmaZeroResult> {
    lemma_zero_on(&SeededSampler { n, trials, seed }, epsilon, threads)
}

pub fn lemma_zero_on<S: MappingSource + ?Sized>(
    source: &S,
    epsilon: f64,
    threads: usize,
) -> Result<LemmaZeroResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let n = source.n();
    let params = BoundParams::new(n, epsilon);
    let threshold = params.beta * (n / 2) as f64;
    let samples = evaluate(source, threads, |k, b| {
        let s = measure(b, k, 1.0, 1.0)?;
        Ok((s.record.d, s.record.z0, s.record.z1))
    })?;
    let failures = samples.iter().filter(|s| (s.0 as f64) < threshold).count() as u64;
    let moments = |get: fn(&(usize, usize, usize)) -> usize| {
        let mut t = IntTally::default();
        samples.iter().for_each(|s| t.push(get(s) as i64));
        t.moments()
    };
    let (d, z0, z1) = (moments(|s| s.0), moments(|s| s.1), moments(|s| s.2));
    Ok(LemmaZeroResult {
        n,
        trials: samples.len() as u64,
        params,
        failure: Proportion::wilson(failures, samples.len() as u64),
        chebyshev_value: (z0.variance + z1.variance) / (params.nu * params.nu),
        d,
        z0,
        z1,
    })
}

/// Mean of `R_i` for one row against the lower bound
/// `floor(n/2)(1 - 1/e) - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMean {
    pub i: usize,
    pub mean: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `mean - 4 std_error < bound`.
    pub flagged: bool,
}

pub fn row_mean_experiment(
    n: usize,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<Vec<RowMean>> {
    row_mean_on(&SeededSampler { n, trials, seed }, threads)
}

pub fn row_mean_on<S: MappingSource + ?Sized>(source: &S, threads: usize) -> Result<Vec<RowMean>> {
    let n = source.n();
    if n < 2 {
        return Err(invalid(format!("row means need n >= 2, got {n}")));
    }
    if source.is_empty() {
        return Err(invalid("trials must be at least 1"));
    }
    let rows = evaluate(source, threads, |_, b| {
        Ok(MatrixStats::of_mapping(b)?.distinct)
    })?;
    let bound = (n / 2) as f64 * one_minus_inv_e() - 1.0;
    Ok((0..n / 2)
        .map(|r| {
            let mut t = IntTally::default();
            rows.iter().for_each(|row| t.push(row[r] as i64));
            let m = t.moments();
            RowMean {
                i: r + 1,
                mean: m.mean,
                std_error: m.std_error,
                bound,
                flagged: m.mean - 4.0 * m.std_error < bound,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ConstantSource {
        n: usize,
        trials: u64,
    }

    impl MappingSource for ConstantSource {
        fn n(&self) -> usize {
            self.n
        }
        fn len(&self) -> u64 {
            self.trials
        }
        fn mapping(&self, _: u64) -> Result<CircularMapping> {
            CircularMapping::constant(self.n, 0)
        }
    }

    #[test]
    fn exhaustive_indexing() {
        let src = Exhaustive { n: 3 };
        assert_eq!(src.len(), 27);
        assert_eq!(src.mapping(0).unwrap().as_slice(), &[0, 0, 0]);
        assert_eq!(src.mapping(5).unwrap().as_slice(), &[2, 1, 0]);
        assert_eq!(src.mapping(26).unwrap().as_slice(), &[2, 2, 2]);
    }

    #[test]
    fn bound_params_arithmetic() {
        let p = BoundParams::new(100, 0.05);
        assert!((p.lambda_eps - 1.5 * 1.5 / 400.0).abs() < 1e-15);
        assert!((p.mcdiarmid_row_bound() - 50.0 * (-2.0 * 2.25 / 400.0f64).exp()).abs() < 1e-12);
        assert!((p.mcdiarmid_row_bound() - 49.44).abs() < 0.005);
        assert!((p.alpha - 0.582).abs() < 5e-4);
        assert_eq!(p.beta, 0.45);
    }

    #[test]
    fn lemma_row_guards() {
        let r = lemma_row_experiment(100, 10, 0.05, 1, 1).unwrap();
        assert!((r.mcdiarmid_value - 49.44).abs() < 0.005);
        assert!(lemma_row_experiment(40, 10, 0.05, 1, 1).is_err());
        assert!(lemma_row_experiment(100, 10, 0.0, 1, 1).is_err());
        assert!(lemma_zero_experiment(10, 10, 1.0, 1, 1).is_err());
    }

    #[test]
    fn single_state_always_synchronizes() {
        let s = estimate_sync_prob(&ExperimentConfig::new(1, 50, 3)).unwrap();
        assert_eq!(s.synchronizing.estimate, 1.0);
    }

    #[test]
    fn exhaustive_zero_moments_at_4() {
        let r = lemma_zero_on(&Exhaustive { n: 4 }, 0.05, 2).unwrap();
        assert_eq!(r.trials, 256);
        assert_eq!(r.z0.mean, 2.0);
    }

    #[test]
    fn row_means_exhaustive_at_5() {
        let rows = row_mean_on(&Exhaustive { n: 5 }, 1).unwrap();
        let bound = 2.0 * one_minus_inv_e() - 1.0;
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!((r.bound - bound).abs() < 1e-15);
            assert!(r.mean >= bound);
            assert!(!r.flagged);
        }
        let exact = enumerate_exact(5).unwrap();
        for (r, e) in rows.iter().zip(&exact.mean_r) {
            assert!((r.mean - crate::chromatic::rational_to_f64(e)).abs() < 1e-12);
        }
    }

    #[test]
    fn row_means_flag_degenerate_sampler() {
        let rows = row_mean_on(&ConstantSource { n: 16, trials: 100 }, 1).unwrap();
        assert!(rows
            .iter()
            .all(|r| r.mean == 1.0 && r.std_error == 0.0 && r.flagged));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let base = ExperimentConfig::new(33, 400, 77);
        let one = run(&base.with_threads(1)).unwrap();
        for threads in [2, 4, 8] {
            let other = run(&base.with_threads(threads)).unwrap();
            assert_eq!(one.records, other.records);
            assert_eq!(one.summary, other.summary);
        }
    }

    #[test]
    fn records_satisfy_invariants() {
        let samples = collect_samples(
            &SeededSampler {
                n: 20,
                trials: 300,
                seed: 5,
            },
            0.5,
            0.5,
            4,
        )
        .unwrap();
        for s in samples {
            let r = &s.record;
            assert!(!r.certificate_present || r.synchronizing);
            assert!(r.d as i64 >= r.z0 as i64 - r.z1 as i64);
            assert_eq!(r.d, r.z0 - s.excess_zeros);
        }
    }
}
