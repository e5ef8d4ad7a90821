//! Weighted dynamic-correlation estimator for Brownian motion pairs and the
//! exact expectations of its components.
//!
//! For hyperparameters `(q, p)` and evaluation time `u`,
//!
//! ```text
//! γ̂_u   = 1/(T−1) Σ_{v≠u} (v^q X_u − v^{−p} X_v)(v^q Y_u − v^{−p} Y_v) / (u−v)²
//! σ̂²_x,u = 1/(T−1) Σ_{v≠u} (v^q X_u − v^{−p} X_v)² / (u−v)²
//! ρ̂_u   = γ̂_u / (σ̂_x,u σ̂_y,u)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pow_pos, NeumaierSum};
use crate::profile::{CorrelationProfile, TimeGrid};

/// Hyperparameters `(q, p)`; both must be finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmEstimatorParams {
    pub q: f64,
    pub p: f64,
}

/// Which proven parameter regions a `(q, p)` pair falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BmTheoremRange {
    /// `p > q = 1/2`: the estimator's consistency range.
    pub consistency: bool,
    /// `0 < q <= 1/2` and `p > 1/2`: vanishing-variance range.
    pub variance_decay: bool,
}

impl BmEstimatorParams {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        for (name, v) in [("q", q), ("p", p)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self { q, p })
    }

    pub fn theorem_range(&self) -> BmTheoremRange {
        BmTheoremRange {
            consistency: self.q == 0.5 && self.p > self.q,
            variance_decay: self.q > 0.0 && self.q <= 0.5 && self.p > 0.5,
        }
    }
}

/// Estimates at a single evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmEstimate {
    pub u: usize,
    pub gamma_hat: f64,
    pub sigma_x_sq_hat: f64,
    pub sigma_y_sq_hat: f64,
    /// `None` when either variance estimate is zero.
    pub rho_hat: Option<f64>,
}

/// Estimates over a set of evaluation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub grid: TimeGrid,
    pub params: BmEstimatorParams,
    pub estimates: Vec<BmEstimate>,
}

fn check_inputs(x: &[f64], y: &[f64], u: usize) -> Result<TimeGrid> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let grid = TimeGrid::new(x.len())?;
    grid.check_index(u)?;
    Ok(grid)
}

/// Cross estimate `γ̂_u` for the series `x`, `y` sampled at `t = 1..=T`.
pub fn gamma_hat_bm(x: &[f64], y: &[f64], u: usize, params: BmEstimatorParams) -> Result<f64> {
    check_inputs(x, y, u)?;
    Ok(weighted_cross_sum(x, y, u, params))
}

/// Variance estimate `σ̂²_u` of a single series; identical to
/// `gamma_hat_bm(path, path, ..)`.
pub fn sigma_sq_hat_bm(path: &[f64], u: usize, params: BmEstimatorParams) -> Result<f64> {
    gamma_hat_bm(path, path, u, params)
}

fn weighted_cross_sum(x: &[f64], y: &[f64], u: usize, params: BmEstimatorParams) -> f64 {
    let n = x.len();
    let (xu, yu) = (x[u - 1], y[u - 1]);
    let mut acc = NeumaierSum::new();
    for v in (1..=n).filter(|&v| v != u) {
        let vf = v as f64;
        let up = pow_pos(vf, params.q);
        let down = pow_pos(vf, -params.p);
        let d = u as f64 - vf;
        let fx = up * xu - down * x[v - 1];
        let fy = up * yu - down * y[v - 1];
        acc.add(fx * fy / (d * d));
    }
    acc.total() / (n - 1) as f64
}

/// `γ / √(σx² σy²)`, clamped to `[-1, 1]` against last-ulp rounding.
fn correlation_ratio(gamma: f64, sx: f64, sy: f64) -> Result<f64> {
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::DegenerateVariance { x: sx, y: sy });
    }
    Ok((gamma / (sx * sy).sqrt()).clamp(-1.0, 1.0))
}

/// `ρ̂_u`; errors when either series has zero variance estimate.
pub fn rho_hat_bm(x: &[f64], y: &[f64], u: usize, params: BmEstimatorParams) -> Result<f64> {
    let e = estimate_bm(x, y, u, params)?;
    correlation_ratio(e.gamma_hat, e.sigma_x_sq_hat, e.sigma_y_sq_hat)
}

/// All three components and the ratio at time `u`.
pub fn estimate_bm(x: &[f64], y: &[f64], u: usize, params: BmEstimatorParams) -> Result<BmEstimate> {
    check_inputs(x, y, u)?;
    let gamma_hat = weighted_cross_sum(x, y, u, params);
    let sigma_x_sq_hat = weighted_cross_sum(x, x, u, params);
    let sigma_y_sq_hat = weighted_cross_sum(y, y, u, params);
    Ok(BmEstimate {
        u,
        gamma_hat,
        sigma_x_sq_hat,
        sigma_y_sq_hat,
        rho_hat: correlation_ratio(gamma_hat, sigma_x_sq_hat, sigma_y_sq_hat).ok(),
    })
}

/// Estimates at every time in `times`.
pub fn estimate_series(
    x: &[f64],
    y: &[f64],
    times: impl IntoIterator<Item = usize>,
    params: BmEstimatorParams,
) -> Result<EstimateSeries> {
    let grid = check_inputs(x, y, 1)?;
    let estimates = times
        .into_iter()
        .map(|u| estimate_bm(x, y, u, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateSeries {
        grid,
        params,
        estimates,
    })
}

/// Summands of the expectation decomposition at time `t`.
///
/// With `ρ` the profile and all sums over `s ≠ t` unless noted:
///
/// ```text
/// K   = Σ s^{2q}/(s−t)²          B1 = Σ s^{1−2p}/(s−t)²     A1 = Σ ρ_s s^{1−2p}/(s−t)²
///                                 B2 = Σ s^{q−p+1}/(s−t)²    A2 = Σ ρ_s s^{q−p+1}/(s−t)²
///                                 B3 = Σ_{s>t} s^{q−p}/(s−t) A3 = Σ_{s>t} s^{q−p}(sρ_s − tρ_t)/(s−t)²
/// (T−1) E γ̂   = tρ_t K + A1 − 2 A2 + 2 A3
/// (T−1) E σ̂² = t K     + B1 − 2 B2 + 2 B3
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmExpectationSums {
    pub k: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl BmExpectationSums {
    pub fn compute(profile: &CorrelationProfile, t: usize, params: BmEstimatorParams, len: usize) -> Result<Self> {
        let grid = TimeGrid::new(len)?;
        grid.check_index(t)?;
        if profile.grid().len() < len {
            return Err(Error::InvalidParameter(format!(
                "profile defined up to T={}, oracle needs T={len}",
                profile.grid().len()
            )));
        }
        let BmEstimatorParams { q, p } = params;
        let tf = t as f64;
        let rho_t = profile.rho(t);
        let mut sums = [NeumaierSum::new(); 7];
        for s in (1..=len).filter(|&s| s != t) {
            let sf = s as f64;
            let d2 = (sf - tf) * (sf - tf);
            let rho_s = profile.rho(s);
            let k = pow_pos(sf, 2.0 * q) / d2;
            let b1 = pow_pos(sf, 1.0 - 2.0 * p) / d2;
            let b2 = pow_pos(sf, q - p + 1.0) / d2;
            sums[0].add(k);
            sums[1].add(rho_s * b1);
            sums[2].add(rho_s * b2);
            sums[4].add(b1);
            sums[5].add(b2);
            if s > t {
                let w = pow_pos(sf, q - p) / d2;
                sums[3].add(w * (sf * rho_s - tf * rho_t));
                sums[6].add(w * (sf - tf));
            }
        }
        let [k, a1, a2, a3, b1, b2, b3] = sums.map(|s| s.total());
        Ok(Self {
            k,
            a1,
            a2,
            a3,
            b1,
            b2,
            b3,
        })
    }

    /// The ratio written with every sum normalised by `K`.
    pub fn ratio_normalised(&self, t: usize, rho_t: f64) -> f64 {
        let tf = t as f64;
        let num = tf * rho_t + (self.a1 - 2.0 * self.a2 + 2.0 * self.a3) / self.k;
        let den = tf + (self.b1 - 2.0 * self.b2 + 2.0 * self.b3) / self.k;
        num / den
    }
}

/// Exact `E(γ̂_t)` under the increment-coupled model on `1..=len`.
pub fn expected_gamma_bm(profile: &CorrelationProfile, t: usize, params: BmEstimatorParams, len: usize) -> Result<f64> {
    let s = BmExpectationSums::compute(profile, t, params, len)?;
    let tf = t as f64;
    let total = tf * profile.rho(t) * s.k + s.a1 - 2.0 * s.a2 + 2.0 * s.a3;
    Ok(total / (len - 1) as f64)
}

/// Exact `E(σ̂²_t)`; does not depend on the profile.
pub fn expected_sigma_sq_bm(t: usize, params: BmEstimatorParams, len: usize) -> Result<f64> {
    let unit = CorrelationProfile::constant(1.0, TimeGrid::new(len)?)?;
    let s = BmExpectationSums::compute(&unit, t, params, len)?;
    let total = t as f64 * s.k + s.b1 - 2.0 * s.b2 + 2.0 * s.b3;
    Ok(total / (len - 1) as f64)
}

/// `Q_t = E(γ̂_t) / √(E σ̂²_x E σ̂²_y)`.
pub fn expected_ratio_q(profile: &CorrelationProfile, t: usize, params: BmEstimatorParams, len: usize) -> Result<f64> {
    let gamma = expected_gamma_bm(profile, t, params, len)?;
    let var = expected_sigma_sq_bm(t, params, len)?;
    if !(var > 0.0) {
        return Err(Error::DegenerateVariance { x: var, y: var });
    }
    Ok(gamma / var)
}
