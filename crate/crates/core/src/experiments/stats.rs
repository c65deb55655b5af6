use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// A binomial proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Proportion {
    pub fn wilson(successes: u64, trials: u64) -> Self {
        Self::wilson_with_z(successes, trials, Z_95)
    }

    pub fn wilson_with_z(successes: u64, trials: u64, z: f64) -> Self {
        if trials == 0 {
            return Proportion {
                successes,
                trials,
                estimate: f64::NAN,
                lower: 0.0,
                upper: 1.0,
            };
        }
        let t = trials as f64;
        let p = successes as f64 / t;
        let z2 = z * z;
        let denom = 1.0 + z2 / t;
        let center = (p + z2 / (2.0 * t)) / denom;
        let half = z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
        Proportion {
            successes,
            trials,
            estimate: p,
            lower: if successes == 0 {
                0.0
            } else {
                (center - half).max(0.0)
            },
            upper: if successes == trials {
                1.0
            } else {
                (center + half).min(1.0)
            },
        }
    }

    /// The proportion of failures.
    pub fn complement(&self) -> Self {
        Proportion::wilson(self.trials - self.successes, self.trials)
    }

    /// Binomial standard error of the point estimate.
    pub fn std_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// True when no step of the sequence rises above the previous interval: the
/// estimate at each grid point is at most the Wilson upper bound at the
/// previous one.
pub fn non_increasing_within_ci(seq: &[Proportion]) -> bool {
    seq.windows(2).all(|w| w[1].estimate <= w[0].upper)
}

/// Exact running sums of an integer statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntTally {
    pub count: u64,
    pub sum: i128,
    pub sum_sq: i128,
}

impl IntTally {
    pub fn push(&mut self, x: i64) {
        self.count += 1;
        self.sum += x as i128;
        self.sum_sq += (x as i128) * (x as i128);
    }

    pub fn merge(&mut self, other: &IntTally) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn moments(&self) -> Moments {
        let c = self.count as i128;
        let mean = if c > 0 {
            self.sum as f64 / c as f64
        } else {
            f64::NAN
        };
        let variance = if c > 1 {
            let numer = c * self.sum_sq - self.sum * self.sum;
            numer as f64 / (c * (c - 1)) as f64
        } else {
            0.0
        };
        Moments {
            mean,
            variance,
            std_error: (variance / c.max(1) as f64).sqrt(),
        }
    }
}

/// Sample mean, unbiased sample variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}
