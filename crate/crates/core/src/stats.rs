//! Small statistics helpers shared by the Monte Carlo estimators.

use serde::Serialize;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub replicates: u64,
}

impl Estimate {
    /// Binomial proportion with the usual `sqrt(p(1-p)/n)` standard error.
    pub fn binomial(successes: u64, n: u64) -> Self {
        assert!(n > 0, "estimate over zero replicates");
        let p = successes as f64 / n as f64;
        Estimate {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            replicates: n,
        }
    }

    /// Sample mean with standard error of the mean.
    pub fn from_samples(samples: &[f64]) -> Self {
        assert!(!samples.is_empty(), "estimate over zero samples");
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() < 2 {
            0.0
        } else {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
            replicates: samples.len() as u64,
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn pooled_se(&self, other: &Estimate) -> f64 {
        (self.std_error.powi(2) + other.std_error.powi(2)).sqrt()
    }
}

/// Total variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pearson chi-square statistic for observed counts against expected counts.
pub fn chi_square_statistic(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}
