//! Covariance and correlation estimators for geometric Brownian pairs
//! `R_t = e^{σW_t}`, `S_t = e^{σU_t}`, and their exact expectations.
//!
//! Writing `c_W(k) = e^{σW_k} − e^{σ²k/2}` for the centred level and
//! `h = σ²` for brevity, the two estimators of `Cov(R_t, S_t)` are
//!
//! ```text
//! V1: γ̂_t = e^{−chT} Σ_k [e^{−bhk/2} c_W(k) − e^{ahk/2} c_W(t)] [e^{−bhk/2} c_U(k) − e^{ahk/2} c_U(t)]
//! V2: γ̂_t = e^{−chT} Σ_k { e^{ahk} c_W(t) c_U(t) − e^{−bhk} c_W(k) c_U(k) }
//! ```
//!
//! and the variance estimates are the same formulas with `U = W`.
//! Every term carries the global factor `e^{−chT}`; it is folded into the
//! exponent of each term so no intermediate exponential exceeds the `f64`
//! range even when the raw weights span hundreds of e-folds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{scaled_exp_diff, NeumaierSum, MAX_EXPONENT};
use crate::paths::GbmPathPair;
use crate::profile::{CorrelationProfile, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GbmVariant {
    /// Product of weighted differences.
    V1,
    /// Difference of weighted products.
    V2,
}

impl fmt::Display for GbmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GbmVariant::V1 => "v1",
            GbmVariant::V2 => "v2",
        })
    }
}

impl FromStr for GbmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v1" | "V1" => Ok(GbmVariant::V1),
            "v2" | "V2" => Ok(GbmVariant::V2),
            other => Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmEstimatorParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma: f64,
    pub variant: GbmVariant,
}

impl GbmEstimatorParams {
    pub fn new(a: f64, b: f64, c: f64, sigma: f64, variant: GbmVariant) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("sigma", sigma)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            a,
            b,
            c,
            sigma,
            variant,
        })
    }

    /// Desk-scale defaults: σ = 0.1, a = 1, c = 2, b = 12 (V1) or 16 (V2).
    pub fn desk_default(variant: GbmVariant) -> Self {
        let b = match variant {
            GbmVariant::V1 => 12.0,
            GbmVariant::V2 => 16.0,
        };
        Self {
            a: 1.0,
            b,
            c: 2.0,
            sigma: 0.1,
            variant,
        }
    }

    /// V1: `c > a > 0` and `b > a + 10`. V2: `b > 15` and `c > a > 0`.
    pub fn theorem_range(&self) -> bool {
        let base = self.c > self.a && self.a > 0.0;
        match self.variant {
            GbmVariant::V1 => base && self.b > self.a + 10.0,
            GbmVariant::V2 => base && self.b > 15.0,
        }
    }

    fn h(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Estimates at a single time, with the V2 sign pathology flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmEstimate {
    pub t: usize,
    pub gamma_hat: f64,
    pub sigma_w_sq_hat: f64,
    pub sigma_u_sq_hat: f64,
    /// `None` when a variance estimate is zero or negative.
    pub rho_hat: Option<f64>,
    pub flags: GbmFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GbmFlags {
    pub negative_variance: bool,
    pub degenerate_variance: bool,
}

impl fmt::Display for GbmFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.negative_variance {
            parts.push("negative_variance");
        }
        if self.degenerate_variance {
            parts.push("degenerate_variance");
        }
        f.write_str(&parts.join("|"))
    }
}

fn check_inputs(w: &[f64], u: &[f64], t: usize) -> Result<usize> {
    if w.len() != u.len() {
        return Err(Error::LengthMismatch(w.len(), u.len()));
    }
    if w.is_empty() {
        return Err(Error::GridTooShort(0));
    }
    if t == 0 || t > w.len() {
        return Err(Error::IndexOutOfRange { index: t, len: w.len() });
    }
    Ok(w.len())
}

/// Scaled centred level `e^{s}(e^{σB_k} − e^{σ²k/2})`.
fn centred(scale: f64, sigma: f64, level: f64, k: usize) -> Result<f64> {
    scaled_exp_diff(scale, sigma * level, sigma * sigma * k as f64 / 2.0)
}

fn cross_sum(w: &[f64], u: &[f64], t: usize, params: &GbmEstimatorParams) -> Result<f64> {
    let len = check_inputs(w, u, t)?;
    let h = params.h();
    let sigma = params.sigma;
    let half_global = -params.c * h * len as f64 / 2.0;
    let mut acc = NeumaierSum::new();
    for k in 1..=len {
        let kf = k as f64;
        let term = match params.variant {
            GbmVariant::V1 => {
                let low = half_global - params.b * h * kf / 2.0;
                let high = half_global + params.a * h * kf / 2.0;
                let fw = centred(low, sigma, w[k - 1], k)? - centred(high, sigma, w[t - 1], t)?;
                let fu = centred(low, sigma, u[k - 1], k)? - centred(high, sigma, u[t - 1], t)?;
                fw * fu
            }
            GbmVariant::V2 => {
                let high = half_global + params.a * h * kf / 2.0;
                let low = half_global - params.b * h * kf / 2.0;
                let at_t = centred(high, sigma, w[t - 1], t)? * centred(high, sigma, u[t - 1], t)?;
                let at_k = centred(low, sigma, w[k - 1], k)? * centred(low, sigma, u[k - 1], k)?;
                at_t - at_k
            }
        };
        acc.add(term);
    }
    Ok(acc.total())
}

/// `γ̂_t` from the driving Brownian paths `w`, `u` (so `R = e^{σw}`).
pub fn gamma_hat_gbm(w: &[f64], u: &[f64], t: usize, params: &GbmEstimatorParams) -> Result<f64> {
    cross_sum(w, u, t, params)
}

/// `σ̂²_t` of a single path: the cross formula with `U = W`.
///
/// For V2 the value may be negative; use [`estimate_gbm`] to get it flagged.
pub fn sigma_sq_hat_gbm(w: &[f64], t: usize, params: &GbmEstimatorParams) -> Result<f64> {
    cross_sum(w, w, t, params)
}

fn gbm_ratio(gamma: f64, sw: f64, su: f64, variant: GbmVariant) -> Result<f64> {
    if sw < 0.0 || su < 0.0 {
        return Err(Error::NegativeVarianceEstimate { w: sw, u: su });
    }
    if sw == 0.0 || su == 0.0 || sw.is_nan() || su.is_nan() {
        return Err(Error::DegenerateVariance { x: sw, y: su });
    }
    let rho = gamma / (sw * su).sqrt();
    Ok(match variant {
        GbmVariant::V1 => rho.clamp(-1.0, 1.0),
        GbmVariant::V2 => rho,
    })
}

/// `ρ̂_t = γ̂_t / (σ̂_W σ̂_U)`.
pub fn rho_hat_gbm(w: &[f64], u: &[f64], t: usize, params: &GbmEstimatorParams) -> Result<f64> {
    let gamma = gamma_hat_gbm(w, u, t, params)?;
    let sw = sigma_sq_hat_gbm(w, t, params)?;
    let su = sigma_sq_hat_gbm(u, t, params)?;
    gbm_ratio(gamma, sw, su, params.variant)
}

/// All components at time `t`; sign problems become flags, not errors.
pub fn estimate_gbm(w: &[f64], u: &[f64], t: usize, params: &GbmEstimatorParams) -> Result<GbmEstimate> {
    let gamma_hat = gamma_hat_gbm(w, u, t, params)?;
    let sigma_w_sq_hat = sigma_sq_hat_gbm(w, t, params)?;
    let sigma_u_sq_hat = sigma_sq_hat_gbm(u, t, params)?;
    let (rho_hat, flags) = match gbm_ratio(gamma_hat, sigma_w_sq_hat, sigma_u_sq_hat, params.variant) {
        Ok(r) => (Some(r), GbmFlags::default()),
        Err(Error::NegativeVarianceEstimate { .. }) => (
            None,
            GbmFlags {
                negative_variance: true,
                degenerate_variance: false,
            },
        ),
        Err(_) => (
            None,
            GbmFlags {
                negative_variance: false,
                degenerate_variance: true,
            },
        ),
    };
    Ok(GbmEstimate {
        t,
        gamma_hat,
        sigma_w_sq_hat,
        sigma_u_sq_hat,
        rho_hat,
        flags,
    })
}

impl GbmPathPair {
    /// Estimates at `t`; `params.sigma` must equal the pair's volatility.
    pub fn estimate(&self, t: usize, params: &GbmEstimatorParams) -> Result<GbmEstimate> {
        if params.sigma != self.sigma {
            return Err(Error::InvalidParameter(format!(
                "estimator sigma {} differs from path sigma {}",
                params.sigma, self.sigma
            )));
        }
        estimate_gbm(&self.w, &self.u, t, params)
    }
}

/// `r_t = log[1 + ρ_t (e^{σ²t} − 1)] / (σ²t)`: correlation of the driving
/// Brownian pair that yields correlation `ρ_t` between `R_t` and `S_t`.
pub fn r_from_rho(rho: f64, sigma: f64, t: f64) -> Result<f64> {
    let ht = sigma * sigma * t;
    if !(ht > 0.0) || !ht.is_finite() {
        return Err(Error::Domain(format!("σ²t must be positive, got {ht}")));
    }
    let inner = rho * ht.exp_m1();
    if !(inner > -1.0) {
        return Err(Error::Domain(format!(
            "log argument 1 + ρ(e^{{σ²t}} − 1) = {} is not positive",
            1.0 + inner
        )));
    }
    Ok(inner.ln_1p() / ht)
}

/// `ρ_t = (e^{r_t σ²t} − 1)/(e^{σ²t} − 1)`.
pub fn rho_from_r(r: f64, sigma: f64, t: f64) -> Result<f64> {
    let ht = sigma * sigma * t;
    if !(ht > 0.0) || !ht.is_finite() {
        return Err(Error::Domain(format!("σ²t must be positive, got {ht}")));
    }
    Ok((r * ht).exp_m1() / ht.exp_m1())
}

/// Correlation of `(R_t, S_t)` implied by the driving profile.
pub fn level_correlation(profile: &CorrelationProfile, sigma: f64, t: usize) -> Result<f64> {
    rho_from_r(profile.rho(t), sigma, t as f64)
}

/// Grouped sums of `e^{chT} E(γ̂_t)` and `e^{chT} E(σ̂²_t)`, all multiplied
/// by `e^{−chT}` (i.e. already on the estimator's scale).
///
/// V1: `E γ̂ = A + Dρ_t − 2B − 2C`, `E σ̂² = E' + D − 2F − 2G`, where
/// `A = Σ_k e^{−bhk} Cov(R_k, S_k)`, `D = e^{h(a+t)}(e^{ht} − 1)Σ_{k<T} e^{ahk}`,
/// `B` gathers the `k < t` cross terms and `C` runs the `k ≥ t` cross form
/// over every `k`. V2: `E γ̂ = Dρ_t − A`, `E σ̂² = D − B'`.
///
/// `ρ_t` here is the level correlation of `(R_t, S_t)`; cross terms use the
/// driving covariance `Cov(W_k, U_t) = m ρ_m`, `m = min(k, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmExpectation {
    pub gamma: f64,
    pub sigma_sq: f64,
    /// Level correlation of `(R_t, S_t)`, the estimation target.
    pub level_rho: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl GbmExpectation {
    pub fn ratio(&self) -> f64 {
        self.gamma / self.sigma_sq
    }
}

fn exp_guard(x: f64) -> Result<f64> {
    if x > MAX_EXPONENT {
        return Err(Error::NumericRange { exponent: x });
    }
    Ok(x.exp())
}

/// `e^{−chT} Σ_{k=1}^T e^{ahk}` in log space.
fn scaled_geometric(params: &GbmEstimatorParams, len: usize) -> Result<f64> {
    let h = params.h();
    let global = -params.c * h * len as f64;
    let step = params.a * h;
    if step == 0.0 {
        return Ok(len as f64 * global.exp());
    }
    // Σ e^{step k} = e^{step} (e^{step T} − 1)/(e^{step} − 1)
    let ratio = (step * len as f64).exp_m1() / step.exp_m1();
    let log_ratio = if ratio.is_finite() {
        ratio.ln()
    } else {
        // e^{step T} overflowed: use the dominant term.
        step * len as f64 - step.exp_m1().ln()
    };
    exp_guard(global + step + log_ratio)
}

/// Exact expectations of the chosen variant at time `t` on `1..=len`.
pub fn gbm_expectation(
    profile: &CorrelationProfile,
    t: usize,
    params: &GbmEstimatorParams,
    len: usize,
) -> Result<GbmExpectation> {
    let grid = TimeGrid::new(len)?;
    grid.check_index(t)?;
    if profile.grid().len() < len {
        return Err(Error::InvalidParameter(format!(
            "profile defined up to T={}, oracle needs T={len}",
            profile.grid().len()
        )));
    }
    let h = params.h();
    let global = -params.c * h * len as f64;
    let tf = t as f64;
    let level_rho = level_correlation(profile, params.sigma, t)?;
    let geo = scaled_geometric(params, len)?;
    // D ρ_t = geo · Cov(R_t, S_t); D = geo · Var(R_t).
    let var_t = (h * tf).exp() * (h * tf).exp_m1();
    let d = geo * var_t;
    let cov_t = (h * tf).exp() * (h * profile.cross_cov(t, t)).exp_m1();

    // Σ_k e^{−bhk} Cov(R_k, S_k) and Σ_k e^{−bhk} Var(R_k).
    let mut own_cov = NeumaierSum::new();
    let mut own_var = NeumaierSum::new();
    for k in 1..=len {
        let kf = k as f64;
        let w = exp_guard(global + (1.0 - params.b) * h * kf)?;
        own_cov.add(w * (h * profile.cross_cov(k, k)).exp_m1());
        own_var.add(w * (h * kf).exp_m1());
    }
    let a = own_cov.total();
    let e = own_var.total();

    match params.variant {
        GbmVariant::V1 => {
            // Cross weights e^{(a−b)hk/2} e^{h(k+t)/2}.
            let mut b_acc = NeumaierSum::new();
            let mut c_acc = NeumaierSum::new();
            let mut f_acc = NeumaierSum::new();
            let mut g_acc = NeumaierSum::new();
            let late_cov = (h * profile.cross_cov(t, t)).exp_m1();
            let late_var = (h * tf).exp_m1();
            for k in 1..=len {
                let kf = k as f64;
                let w = exp_guard(global + (params.a - params.b) * h * kf / 2.0 + h * (kf + tf) / 2.0)?;
                c_acc.add(w * late_cov);
                g_acc.add(w * late_var);
                if k < t {
                    let early = h * profile.cross_cov(k, t);
                    b_acc.add(w * ((early).exp_m1() - late_cov));
                    f_acc.add(w * ((h * kf).exp_m1() - late_var));
                }
            }
            let (b, c, f, g) = (b_acc.total(), c_acc.total(), f_acc.total(), g_acc.total());
            let gamma = a + geo * cov_t - 2.0 * b - 2.0 * c;
            let sigma_sq = e + d - 2.0 * f - 2.0 * g;
            Ok(GbmExpectation {
                gamma,
                sigma_sq,
                level_rho,
                d,
                a,
                b,
                c,
                e,
                f,
                g,
            })
        }
        GbmVariant::V2 => Ok(GbmExpectation {
            gamma: geo * cov_t - a,
            sigma_sq: d - e,
            level_rho,
            d,
            a,
            b: e,
            c: 0.0,
            e,
            f: 0.0,
            g: 0.0,
        }),
    }
}

pub fn expected_gamma_gbm(
    profile: &CorrelationProfile,
    t: usize,
    params: &GbmEstimatorParams,
    len: usize,
) -> Result<f64> {
    Ok(gbm_expectation(profile, t, params, len)?.gamma)
}

pub fn expected_sigma_sq_gbm(t: usize, params: &GbmEstimatorParams, len: usize) -> Result<f64> {
    let unit = CorrelationProfile::constant(1.0, TimeGrid::new(len)?)?;
    Ok(gbm_expectation(&unit, t, params, len)?.sigma_sq)
}

/// `E(γ̂_t)/√(E σ̂²_W E σ̂²_U)`; both variances share one law.
pub fn expected_ratio_gbm(
    profile: &CorrelationProfile,
    t: usize,
    params: &GbmEstimatorParams,
    len: usize,
) -> Result<f64> {
    let ex = gbm_expectation(profile, t, params, len)?;
    if !(ex.sigma_sq > 0.0) {
        return Err(Error::DegenerateVariance {
            x: ex.sigma_sq,
            y: ex.sigma_sq,
        });
    }
    Ok(ex.ratio())
}
