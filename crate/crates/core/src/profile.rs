//! Correlation profiles on the unit integer grid.
//!
//! A profile fixes the target dynamic correlation `ρ_t = Cov(X_t, Y_t) / t`
//! for `t = 1..=T`. Paths are generated from per-step increment
//! correlations `r_i = i ρ_i − (i−1) ρ_{i−1}` (with `ρ_0 = 0`), so a profile
//! is only admissible when every `r_i` lies in `[-1, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbm::r_from_rho;

/// Slack allowed on `|r_i| <= 1` for rounding in `i ρ_i − (i−1) ρ_{i−1}`.
const INCREMENT_SLACK: f64 = 1e-12;

/// Sample times `t_i = i` for `i = 1..=len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeGrid {
    len: usize,
}

impl TimeGrid {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::GridTooShort(len));
        }
        Ok(Self { len })
    }

    /// Number of samples `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> impl Iterator<Item = usize> {
        1..=self.len
    }

    pub fn check_index(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.len {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.len,
            });
        }
        Ok(())
    }
}

/// How `ρ_t` is defined.
///
/// The textual form (`Display`/`FromStr`) is the command-line grammar:
///
/// | form | meaning |
/// |------|---------|
/// | `constant:c` | `ρ_t = c` |
/// | `linear:c0,c1` | `ρ_t = c0 + c1 t` |
/// | `table:v1,v2,...` | `ρ_t = v_t` (inline table) |
/// | `regime:c0,c1,k` | increments correlate at `c0` up to step `k`, at `c1` after |
/// | `gbm-constant:rho,sigma` | driving profile giving `Corr(e^{σW_t}, e^{σU_t}) = rho` |
///
/// Tables stored in a file use `table:@path` and are resolved by
/// [`crate::csv_io::load_profile_spec`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Constant(f64),
    Linear { intercept: f64, slope: f64 },
    Table(Vec<f64>),
    Regime { before: f64, after: f64, switch: usize },
    GbmConstant { rho: f64, sigma: f64 },
}

impl ProfileSpec {
    /// `ρ_t` for `t >= 1`; `None` when a table is too short.
    pub fn rho_at(&self, t: usize) -> Option<f64> {
        debug_assert!(t >= 1);
        let tf = t as f64;
        Some(match self {
            ProfileSpec::Constant(c) => *c,
            ProfileSpec::Linear { intercept, slope } => intercept + slope * tf,
            ProfileSpec::Table(values) => *values.get(t - 1)?,
            ProfileSpec::Regime { before, after, switch } => {
                if t <= *switch {
                    *before
                } else {
                    let k = *switch as f64;
                    (k * before + (tf - k) * after) / tf
                }
            }
            ProfileSpec::GbmConstant { rho, sigma } => r_from_rho(*rho, *sigma, tf).ok()?,
        })
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Constant(c) => write!(f, "constant:{c}"),
            ProfileSpec::Linear { intercept, slope } => write!(f, "linear:{intercept},{slope}"),
            ProfileSpec::Table(values) => {
                f.write_str("table:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            ProfileSpec::Regime { before, after, switch } => write!(f, "regime:{before},{after},{switch}"),
            ProfileSpec::GbmConstant { rho, sigma } => write!(f, "gbm-constant:{rho},{sigma}"),
        }
    }
}

fn spec_error(spec: &str, reason: impl Into<String>) -> Error {
    Error::ProfileSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_numbers(spec: &str, body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|s| {
            let s = s.trim();
            let v: f64 = s
                .parse()
                .map_err(|_| spec_error(spec, format!("`{s}` is not a number")))?;
            if !v.is_finite() {
                return Err(spec_error(spec, format!("`{s}` is not finite")));
            }
            Ok(v)
        })
        .collect()
}

fn expect_arity(spec: &str, values: &[f64], n: usize) -> Result<()> {
    if values.len() != n {
        return Err(spec_error(spec, format!("expected {n} value(s), got {}", values.len())));
    }
    Ok(())
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| spec_error(spec, "missing `kind:` prefix"))?;
        match kind.trim() {
            "constant" => {
                let v = parse_numbers(spec, body)?;
                expect_arity(spec, &v, 1)?;
                Ok(ProfileSpec::Constant(v[0]))
            }
            "linear" => {
                let v = parse_numbers(spec, body)?;
                expect_arity(spec, &v, 2)?;
                Ok(ProfileSpec::Linear {
                    intercept: v[0],
                    slope: v[1],
                })
            }
            "table" => {
                if body.trim_start().starts_with('@') {
                    return Err(spec_error(spec, "file tables must be resolved with load_profile_spec"));
                }
                Ok(ProfileSpec::Table(parse_numbers(spec, body)?))
            }
            "regime" => {
                let parts: Vec<&str> = body.split(',').collect();
                if parts.len() != 3 {
                    return Err(spec_error(spec, "expected before,after,switch"));
                }
                let v = parse_numbers(spec, &parts[..2].join(","))?;
                let switch: usize = parts[2]
                    .trim()
                    .parse()
                    .map_err(|_| spec_error(spec, "switch must be a non-negative integer"))?;
                Ok(ProfileSpec::Regime {
                    before: v[0],
                    after: v[1],
                    switch,
                })
            }
            "gbm-constant" => {
                let v = parse_numbers(spec, body)?;
                expect_arity(spec, &v, 2)?;
                if v[1] <= 0.0 {
                    return Err(spec_error(spec, "sigma must be positive"));
                }
                Ok(ProfileSpec::GbmConstant { rho: v[0], sigma: v[1] })
            }
            other => Err(spec_error(spec, format!("unknown kind `{other}`"))),
        }
    }
}

impl Serialize for ProfileSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProfileSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A validated profile on a concrete grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    spec: ProfileSpec,
    grid: TimeGrid,
}

impl CorrelationProfile {
    /// Validates `spec` on `grid`: every `ρ_t` and every increment
    /// correlation must lie in `[-1, 1]`.
    pub fn build(spec: ProfileSpec, grid: TimeGrid) -> Result<Self> {
        if let ProfileSpec::Table(values) = &spec {
            if values.len() != grid.len() {
                return Err(Error::TableLength {
                    expected: grid.len(),
                    got: values.len(),
                });
            }
        }
        let mut prev = 0.0;
        for t in grid.times() {
            let rho = spec
                .rho_at(t)
                .ok_or_else(|| spec_error(&spec.to_string(), format!("undefined at t={t}")))?;
            if !rho.is_finite() || !(-1.0..=1.0).contains(&rho) {
                return Err(Error::ProfileOutOfRange { index: t, value: rho });
            }
            let r = increment(t, rho, prev);
            if !(r.abs() <= 1.0 + INCREMENT_SLACK) {
                return Err(Error::IncrementInfeasible { index: t, value: r });
            }
            prev = rho;
        }
        Ok(Self { spec, grid })
    }

    pub fn constant(rho: f64, grid: TimeGrid) -> Result<Self> {
        Self::build(ProfileSpec::Constant(rho), grid)
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// `ρ_t` for `1 <= t <= T`.
    pub fn rho(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.grid.len(), "t={t} outside 1..={}", self.grid.len());
        // Validated at construction.
        self.spec.rho_at(t).unwrap_or(f64::NAN)
    }

    /// Cross-covariance `Cov(X_s, Y_t) = m ρ_m` with `m = min(s, t)` under
    /// the increment coupling.
    pub fn cross_cov(&self, s: usize, t: usize) -> f64 {
        let m = s.min(t);
        m as f64 * self.rho(m)
    }

    /// `true` when every `ρ_t` is the same value.
    pub fn is_constant(&self) -> bool {
        matches!(self.spec, ProfileSpec::Constant(_))
    }

    /// Per-step increment correlations `r_1..r_T`, clamped into `[-1, 1]`.
    pub fn increment_correlations(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.grid
            .times()
            .map(|t| {
                let rho = self.rho(t);
                let r = increment(t, rho, prev).clamp(-1.0, 1.0);
                prev = rho;
                r
            })
            .collect()
    }
}

fn increment(t: usize, rho: f64, prev: f64) -> f64 {
    t as f64 * rho - (t - 1) as f64 * prev
}

/// Increment correlations of a validated profile.
pub fn increment_correlations(profile: &CorrelationProfile) -> Vec<f64> {
    profile.increment_correlations()
}
