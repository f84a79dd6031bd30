use rand::Rng;

use crate::error::{Error, Result};

/// Precomputed powers `a[k] = k^-tau` and their running sums `b[n]`.
///
/// Any prefix `n <= n_max` normalizes to a distribution `p_k = a[k] / b[n]`
/// over ranks `1..=n`, so the table serves a growing set of reports without
/// being rebuilt.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawTable {
    tau: f64,
    // Index 0 holds rank 1.
    powers: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PowerLawTable {
    pub fn new(tau: f64, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("power-law table needs n_max >= 1".into()));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
        }
        let powers: Vec<f64> = (1..=n_max).map(|k| (k as f64).powf(-tau)).collect();
        let cumulative = powers
            .iter()
            .scan(0.0, |acc, &a| {
                *acc += a;
                Some(*acc)
            })
            .collect();
        Ok(Self { tau, powers, cumulative })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn capacity(&self) -> usize {
        self.powers.len()
    }

    /// `a[k]` for rank `k >= 1`.
    pub fn power(&self, k: usize) -> f64 {
        self.powers[k - 1]
    }

    /// `b[n]`, the sum of `a[1..=n]`.
    pub fn cumulative(&self, n: usize) -> f64 {
        self.cumulative[n - 1]
    }

    /// Probability of rank `k` among `n` candidates.
    pub fn probability(&self, k: usize, n: usize) -> f64 {
        self.power(k) / self.cumulative(n)
    }

    /// Draws a rank in `1..=n` with probability `p_k`, scanning the running
    /// sums until the scaled uniform number falls inside an interval.
    pub fn sample_rank<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<usize> {
        if n == 0 || n > self.capacity() {
            return Err(Error::TableTooSmall {
                requested: n,
                capacity: self.capacity(),
            });
        }
        let u = rng.random::<f64>() * self.cumulative[n - 1];
        Ok(self.cumulative[..n]
            .iter()
            .position(|&b| u < b)
            .map_or(n, |idx| idx + 1))
    }
}
