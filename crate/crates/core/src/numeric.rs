//! Small numerical helpers shared by the estimators.

use crate::error::{Error, Result};

/// Largest exponent accepted before `exp` would overflow an `f64`.
pub const MAX_EXPONENT: f64 = 709.0;

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().total()
}

/// `exp(x)` that refuses exponents past [`MAX_EXPONENT`].
pub fn checked_exp(x: f64) -> Result<f64> {
    if x > MAX_EXPONENT {
        return Err(Error::NumericRange { exponent: x });
    }
    Ok(x.exp())
}

/// `exp(scale + a) - exp(scale + b)` evaluated without forming the unscaled
/// exponentials.
pub fn scaled_exp_diff(scale: f64, a: f64, b: f64) -> Result<f64> {
    let hi = scale + a.max(b);
    if hi > MAX_EXPONENT {
        return Err(Error::NumericRange { exponent: hi });
    }
    // e^{s+b} (e^{a-b} - 1); expm1 keeps accuracy when a ≈ b.
    Ok((scale + b).exp() * (a - b).exp_m1())
}

/// `v^e` for `v >= 1`.
pub fn pow_pos(v: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        v
    } else if e == -1.0 {
        1.0 / v
    } else {
        v.powf(e)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
