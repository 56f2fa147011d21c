//! Streaming summaries and Welch's unequal-variance t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Summary {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Summary {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (`n - 1` denominator); 0 below two observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    /// Sample standard deviation over `sqrt(n)`.
    pub fn standard_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Summary {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Summary::default();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub dof: f64,
    /// Two-sided.
    pub p_value: f64,
}

/// Welch's t-test from two summaries.
///
/// With zero variance on both sides the statistic is 0 (equal means, p = 1)
/// or infinite (p = 0), and the degrees of freedom fall back to `n_a + n_b - 2`.
pub fn welch(a: &Summary, b: &Summary) -> WelchTest {
    let (va, vb) = (a.variance() / a.n as f64, b.variance() / b.n as f64);
    let diff = a.mean() - b.mean();
    let se2 = va + vb;
    if se2 == 0.0 || !se2.is_finite() {
        let dof = (a.n + b.n).saturating_sub(2) as f64;
        return if diff == 0.0 {
            WelchTest { t: 0.0, dof, p_value: 1.0 }
        } else {
            WelchTest { t: diff.signum() * f64::INFINITY, dof, p_value: 0.0 }
        };
    }
    let t = diff / se2.sqrt();
    let mut denom = 0.0;
    if a.n > 1 {
        denom += va * va / (a.n - 1) as f64;
    }
    if b.n > 1 {
        denom += vb * vb / (b.n - 1) as f64;
    }
    let dof = se2 * se2 / denom;
    let p_value = match StudentsT::new(0.0, 1.0, dof) {
        Ok(dist) => (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0),
        Err(_) => f64::NAN,
    };
    WelchTest { t, dof, p_value }
}

pub fn welch_samples(a: &[f64], b: &[f64]) -> WelchTest {
    welch(&a.iter().copied().collect(), &b.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [0.1, 0.5, 0.25, 0.9, 0.3];
        let s: Summary = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean() - mean).abs() < 1e-15);
        assert!((s.variance() - var).abs() < 1e-15);
        assert!((s.standard_error() - (var / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identical_samples() {
        let xs = [0.1, 0.2, 0.4, 0.4];
        let r = welch_samples(&xs, &xs);
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn degenerate_separation() {
        let r = welch_samples(&[0.0; 1000], &[1.0; 1000]);
        assert!(r.p_value < 1e-6);
        assert!(r.t < 0.0);
    }

    #[test]
    fn textbook_values() {
        // Reference values from an independent implementation
        // (scipy.stats.ttest_ind with equal_var=False).
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let r = welch_samples(&a, &b);
        assert!((r.t - (-2.455356398286006)).abs() < 1e-9, "{r:?}");
        assert!((r.dof - 24.988529290231416).abs() < 1e-6, "{r:?}");
        assert!((r.p_value - 0.021378001462866985).abs() < 1e-8, "{r:?}");
    }
}
