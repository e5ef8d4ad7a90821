//! Simulation of correlated Brownian and geometric Brownian path pairs.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::MAX_EXPONENT;
use crate::profile::{CorrelationProfile, TimeGrid};
use crate::rng::rng_from_seed;

/// Which series receives the "leading" Gaussian stream.
///
/// With `XLeads`, `ΔX_i = Z_i` and `ΔY_i = r_i Z_i + √(1 − r_i²) Z'_i`;
/// `YLeads` swaps the roles. Both give the same joint law of `(X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    #[default]
    XLeads,
    YLeads,
}

/// Correlated Brownian motion pair sampled at `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BmPathPair {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub profile: CorrelationProfile,
    pub seed: u64,
}

impl BmPathPair {
    /// Value of `X_t` (1-based).
    pub fn x_at(&self, t: usize) -> f64 {
        self.x[t - 1]
    }

    pub fn y_at(&self, t: usize) -> f64 {
        self.y[t - 1]
    }
}

/// Simulates `(X, Y)` by cumulating Gaussian increment pairs with
/// correlation `r_i`.
pub fn simulate_bm_pair(profile: &CorrelationProfile, seed: u64) -> BmPathPair {
    simulate_bm_pair_with(profile, seed, Coupling::XLeads)
}

pub fn simulate_bm_pair_with(profile: &CorrelationProfile, seed: u64, coupling: Coupling) -> BmPathPair {
    let grid = profile.grid();
    let increments = profile.increment_correlations();
    let mut rng = rng_from_seed(seed);
    let mut x = Vec::with_capacity(grid.len());
    let mut y = Vec::with_capacity(grid.len());
    let (mut lead, mut follow) = (0.0f64, 0.0f64);
    for r in increments {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        lead += z1;
        follow += r * z1 + (1.0 - r * r).sqrt() * z2;
        match coupling {
            Coupling::XLeads => {
                x.push(lead);
                y.push(follow);
            }
            Coupling::YLeads => {
                x.push(follow);
                y.push(lead);
            }
        }
    }
    BmPathPair {
        grid,
        x,
        y,
        profile: profile.clone(),
        seed,
    }
}

/// Geometric Brownian pair `R_t = e^{σW_t}`, `S_t = e^{σU_t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmPathPair {
    pub grid: TimeGrid,
    pub r_path: Vec<f64>,
    pub s_path: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub sigma: f64,
    pub profile: CorrelationProfile,
    pub seed: u64,
}

/// Exponentiates the driving Brownian pair.
pub fn simulate_gbm_pair(bm: &BmPathPair, sigma: f64) -> Result<GbmPathPair> {
    let (r_path, s_path) = exponentiate(&bm.x, &bm.y, sigma)?;
    Ok(GbmPathPair {
        grid: bm.grid,
        r_path,
        s_path,
        w: bm.x.clone(),
        u: bm.y.clone(),
        sigma,
        profile: bm.profile.clone(),
        seed: bm.seed,
    })
}

/// `(e^{σW}, e^{σU})`, rejecting exponents that would overflow.
pub fn exponentiate(w: &[f64], u: &[f64], sigma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let exp = |v: &f64| {
        let e = sigma * v;
        if e.abs() > MAX_EXPONENT {
            Err(Error::NumericRange { exponent: e })
        } else {
            Ok(e.exp())
        }
    };
    let r = w.iter().map(exp).collect::<Result<Vec<_>>>()?;
    let s = u.iter().map(exp).collect::<Result<Vec<_>>>()?;
    Ok((r, s))
}
