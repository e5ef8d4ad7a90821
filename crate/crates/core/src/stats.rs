//! Sample summaries used by the Monte Carlo harness.

use serde::{Deserialize, Serialize};

use crate::numeric::NeumaierSum;

/// Mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            xs.iter().copied().collect::<NeumaierSum>().total() / n as f64
        };
        let variance = if n < 2 {
            f64::NAN
        } else {
            xs.iter()
                .map(|x| (x - mean) * (x - mean))
                .collect::<NeumaierSum>()
                .total()
                / (n - 1) as f64
        };
        Self {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }

    /// `|mean − target| ≤ k·SE`.
    pub fn within_se(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }

    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// Standard error of the sample variance, `√((m₄ − s⁴(n−3)/(n−1))/n)`.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let s = Summary::from_samples(xs);
    let n = xs.len() as f64;
    let m4 = xs.iter().map(|x| (x - s.mean).powi(4)).collect::<NeumaierSum>().total() / n;
    ((m4 - s.variance * s.variance * (n - 3.0) / (n - 1.0)) / n)
        .max(0.0)
        .sqrt()
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interquartile range; NaNs are dropped.
pub fn iqr(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}
