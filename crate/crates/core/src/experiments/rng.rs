use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::CircularMapping;
use crate::error::{invalid, Result};

/// Random stream for one trial: a ChaCha8 generator keyed by the master seed
/// and switched to the stream numbered by the trial index, so distinct trials
/// never share a stream and the order in which trials run is irrelevant.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    trial: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trial);
        RngStream {
            master_seed,
            trial,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn trial(&self) -> u64 {
        self.trial
    }

    /// Uniform on `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

/// A uniform element of `M_n`: independent uniform coordinates.
pub fn sample_mapping(stream: &mut RngStream, n: usize) -> Result<CircularMapping> {
    if n == 0 {
        return Err(invalid("cannot sample a mapping on zero states"));
    }
    CircularMapping::new((0..n).map(|_| stream.below(n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state() {
        let mut s = RngStream::new(9, 3);
        for _ in 0..10 {
            assert_eq!(sample_mapping(&mut s, 1).unwrap().as_slice(), &[0]);
        }
    }

    #[test]
    fn streams_are_pure_functions_of_seed_and_trial() {
        let a = sample_mapping(&mut RngStream::new(42, 7), 16).unwrap();
        let b = sample_mapping(&mut RngStream::new(42, 7), 16).unwrap();
        assert_eq!(a, b);
        let c = sample_mapping(&mut RngStream::new(42, 8), 16).unwrap();
        let d = sample_mapping(&mut RngStream::new(43, 7), 16).unwrap();
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn coordinates_are_uniform() {
        // 10^5 mappings on 5 states: every (coordinate, value) count within
        // 4 standard deviations of 10^5 / 5.
        let trials = 100_000u64;
        let n = 5;
        let mut counts = vec![[0u64; 5]; n];
        for t in 0..trials {
            let b = sample_mapping(&mut RngStream::new(2024, t), n).unwrap();
            for (j, &v) in b.as_slice().iter().enumerate() {
                counts[j][v] += 1;
            }
        }
        let p = 1.0 / n as f64;
        let mean = trials as f64 * p;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        let mut chi2 = 0.0;
        for row in &counts {
            for &c in row {
                assert!((c as f64 - mean).abs() <= 4.0 * sd, "count {c}");
                chi2 += (c as f64 - mean).powi(2) / mean;
            }
        }
        // 5 coordinates x 4 degrees of freedom; the 0.999 quantile of chi^2_20 is 45.3
        assert!(chi2 < 45.3, "chi2 = {chi2}");
    }
}
