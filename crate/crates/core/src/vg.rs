//! Variance-gamma density and moments, and the variance-gamma law of a
//! product of two correlated centred normals.
//!
//! ```text
//! p(x; r, θ, σ, μ) = exp(θ(x−μ)/σ²) / (σ√π Γ(r/2))
//!                    · (|x−μ| / (2√(θ²+σ²)))^{(r−1)/2}
//!                    · K_{(r−1)/2}(√(θ²+σ²)|x−μ| / σ²)
//! ```

use serde::{Deserialize, Serialize};

use crate::bessel::ln_bessel_k;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    pub r: f64,
    pub theta: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl VgParams {
    pub fn new(r: f64, theta: f64, sigma: f64, mu: f64) -> Result<Self> {
        let p = Self { r, theta, sigma, mu };
        p.validate()?;
        Ok(p)
    }

    /// `r > 0`, `σ > 0`, everything finite.
    pub fn validate(&self) -> Result<()> {
        if ![self.r, self.theta, self.sigma, self.mu].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("variance-gamma parameters must be finite".into()));
        }
        if !(self.r > 0.0) {
            return Err(Error::Domain(format!("shape r must be > 0, got {}", self.r)));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Domain(format!("scale sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// `σ = 0`: the law degenerates (e.g. a product of perfectly correlated
    /// normals, a scaled χ²₁) and has no density of this form.
    pub fn is_degenerate(&self) -> bool {
        self.sigma == 0.0
    }

    fn order(&self) -> f64 {
        (self.r - 1.0) / 2.0
    }

    fn radius(&self) -> f64 {
        self.theta.hypot(self.sigma)
    }
}

/// `ln p(x)`.
pub fn vg_log_pdf(x: f64, params: &VgParams) -> Result<f64> {
    params.validate()?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    let VgParams { r, theta, sigma, mu } = *params;
    let nu = params.order();
    let s = params.radius();
    let sigma_sq = sigma * sigma;
    let d = (x - mu).abs();
    let norm = -sigma.ln() - 0.5 * std::f64::consts::PI.ln() - libm::lgamma(r / 2.0);
    if d == 0.0 {
        if nu <= 0.0 {
            return Err(Error::Domain(format!(
                "density is unbounded at x = mu for r = {r} <= 1"
            )));
        }
        // K_ν(z) ~ Γ(ν)/2 (2/z)^ν as z → 0.
        return Ok(norm + libm::lgamma(nu) - std::f64::consts::LN_2 + nu * (sigma_sq / (s * s)).ln());
    }
    let z = s * d / sigma_sq;
    Ok(norm + theta * (x - mu) / sigma_sq + nu * (d / (2.0 * s)).ln() + ln_bessel_k(nu.abs(), z)?)
}

/// Variance-gamma density at `x`.
pub fn vg_pdf(x: f64, params: &VgParams) -> Result<f64> {
    Ok(vg_log_pdf(x, params)?.exp())
}

/// `(E V, Var V) = (μ + rθ, r(σ² + 2θ²))`.
pub fn vg_moments(params: &VgParams) -> (f64, f64) {
    let VgParams { r, theta, sigma, mu } = *params;
    (mu + r * theta, r * (sigma * sigma + 2.0 * theta * theta))
}

/// Law of `Z = XY` for centred normals with standard deviations
/// `σ_x`, `σ_y` and correlation `ρ`: `VG(1, ρσ_xσ_y, σ_xσ_y√(1−ρ²), 0)`.
///
/// At `|ρ| = 1` the scale is zero and the result is flagged by
/// [`VgParams::is_degenerate`]; moments remain valid.
pub fn product_normal_vg_params(sigma_x: f64, sigma_y: f64, rho: f64) -> Result<VgParams> {
    if !(sigma_x > 0.0 && sigma_y > 0.0) || !sigma_x.is_finite() || !sigma_y.is_finite() {
        return Err(Error::Domain(format!(
            "standard deviations must be positive, got {sigma_x}, {sigma_y}"
        )));
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::Domain(format!("correlation must be in [-1, 1], got {rho}")));
    }
    let scale = sigma_x * sigma_y;
    Ok(VgParams {
        r: 1.0,
        theta: rho * scale,
        sigma: scale * (1.0 - rho * rho).sqrt(),
        mu: 0.0,
    })
}

/// Mass, mean and variance of the density by adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Truncation points where the density has fallen below `1e−16` of its
/// peak, searched outward from the mean in steps of one standard deviation.
pub fn truncation_range(params: &VgParams) -> Result<(f64, f64)> {
    params.validate()?;
    let (mean, var) = vg_moments(params);
    let sd = var.sqrt();
    let mut peak: f64 = 0.0;
    for i in 0..=400 {
        let x = mean - 8.0 * sd + 16.0 * sd * i as f64 / 400.0;
        if x != params.mu {
            peak = peak.max(vg_pdf(x, params)?);
        }
    }
    let floor = 1e-16 * peak;
    let walk = |dir: f64| -> Result<f64> {
        let start = if dir < 0.0 {
            mean.min(params.mu)
        } else {
            mean.max(params.mu)
        };
        let mut k = 1.0;
        loop {
            let x = start + dir * k * sd;
            if vg_pdf(x, params)? < floor {
                return Ok(x);
            }
            k += 1.0;
            if k > 1e4 {
                return Err(Error::Domain("tail search did not terminate".into()));
            }
        }
    };
    Ok((walk(-1.0)?, walk(1.0)?))
}

pub fn quadrature_moments(params: &VgParams) -> Result<QuadratureMoments> {
    let (lower, upper) = truncation_range(params)?;
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-11,
        max_intervals: 20_000,
    };
    let mu = params.mu;
    let pdf = |x: f64| vg_pdf(x, params).unwrap_or(0.0);
    // Split at μ where the density may be singular.
    let piece = |g: &dyn Fn(f64) -> f64| -> Result<f64> {
        let left = integrate(g, lower, mu, opts)?.value;
        let right = integrate(g, mu, upper, opts)?.value;
        Ok(left + right)
    };
    let mass = piece(&pdf)?;
    let mean = piece(&|x| x * pdf(x))? / mass;
    let variance = piece(&|x| (x - mean) * (x - mean) * pdf(x))? / mass;
    Ok(QuadratureMoments {
        mass,
        mean,
        variance,
        lower,
        upper,
    })
}
