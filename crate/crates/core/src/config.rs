//! Experiment configuration and its TOML file format.
//!
//! ```toml
//! experiment = "bm_consistency"
//! profile = "constant:0.5"
//! t_list = [500, 2000]
//! t_eval = 10
//! reps = 500
//! master_seed = 0
//!
//! [bm]
//! q = 0.5
//! p = 1.0
//! ```
//!
//! GBM experiments use a `[gbm]` section (`variant`, `a`, `b`, `c`, `sigma`);
//! `exp_abs_bound` uses `[bound]` with `sigma_list`, and reads its times from
//! `t_list`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bm::BmEstimatorParams;
use crate::csv_io::load_profile_spec;
use crate::error::{Error, Result};
use crate::gbm::{GbmEstimatorParams, GbmVariant};
use crate::profile::ProfileSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BmConsistency,
    BmVarianceDecay,
    BmBiasPq0,
    GbmConsistencyV1,
    GbmConsistencyV2,
    GbmVarianceDecay,
    MomentChecks,
    ExpAbsBound,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::BmConsistency,
        ExperimentKind::BmVarianceDecay,
        ExperimentKind::BmBiasPq0,
        ExperimentKind::GbmConsistencyV1,
        ExperimentKind::GbmConsistencyV2,
        ExperimentKind::GbmVarianceDecay,
        ExperimentKind::MomentChecks,
        ExperimentKind::ExpAbsBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BmConsistency => "bm_consistency",
            ExperimentKind::BmVarianceDecay => "bm_variance_decay",
            ExperimentKind::BmBiasPq0 => "bm_bias_pq0",
            ExperimentKind::GbmConsistencyV1 => "gbm_consistency_v1",
            ExperimentKind::GbmConsistencyV2 => "gbm_consistency_v2",
            ExperimentKind::GbmVarianceDecay => "gbm_variance_decay",
            ExperimentKind::MomentChecks => "moment_checks",
            ExperimentKind::ExpAbsBound => "exp_abs_bound",
        }
    }

    pub fn uses_bm_estimator(self) -> bool {
        matches!(
            self,
            ExperimentKind::BmConsistency | ExperimentKind::BmVarianceDecay | ExperimentKind::BmBiasPq0
        )
    }

    pub fn uses_gbm_estimator(self) -> bool {
        matches!(
            self,
            ExperimentKind::GbmConsistencyV1 | ExperimentKind::GbmConsistencyV2 | ExperimentKind::GbmVarianceDecay
        )
    }

    pub fn default_reps(self) -> usize {
        if self.uses_gbm_estimator() {
            2000
        } else {
            500
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Estimator hyperparameters carried by a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorParams {
    Bm(BmEstimatorParams),
    Gbm(GbmEstimatorParams),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub profile: ProfileSpec,
    pub t_list: Vec<usize>,
    pub t_eval: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub params: EstimatorParams,
    /// Volatilities for `exp_abs_bound`.
    pub sigma_list: Vec<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.t_list.is_empty() {
            return bad("t_list must not be empty".into());
        }
        if self.t_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("t_list must be strictly ascending".into());
        }
        if self.reps < 2 {
            return bad(format!("reps must be >= 2, got {}", self.reps));
        }
        let k = self.experiment;
        if k.uses_bm_estimator() || k.uses_gbm_estimator() {
            if self.t_list[0] < 2 {
                return bad("every T in t_list must be >= 2".into());
            }
            if self.t_eval == 0 || self.t_eval > self.t_list[0] {
                return bad(format!("t_eval must be in 1..={}, got {}", self.t_list[0], self.t_eval));
            }
        } else if self.t_list[0] == 0 {
            return bad("times must be >= 1".into());
        }
        match (k.uses_bm_estimator(), k.uses_gbm_estimator(), &self.params) {
            (true, _, EstimatorParams::Bm(_)) | (_, true, EstimatorParams::Gbm(_)) => {}
            (false, false, EstimatorParams::None) => {}
            (true, _, _) => return bad(format!("{k} needs a [bm] section")),
            (_, true, _) => return bad(format!("{k} needs a [gbm] section")),
            _ => return bad(format!("{k} takes no estimator section")),
        }
        if let EstimatorParams::Gbm(g) = self.params {
            let expected = match k {
                ExperimentKind::GbmConsistencyV1 => Some(GbmVariant::V1),
                ExperimentKind::GbmConsistencyV2 => Some(GbmVariant::V2),
                _ => None,
            };
            if expected.is_some_and(|v| v != g.variant) {
                return bad(format!("{k} requires variant {}", expected.unwrap()));
            }
        }
        if k == ExperimentKind::ExpAbsBound
            && (self.sigma_list.is_empty() || self.sigma_list.iter().any(|s| !(*s > 0.0 && s.is_finite())))
        {
            return bad("exp_abs_bound needs a non-empty positive [bound] sigma_list".into());
        }
        Ok(())
    }

    pub fn t_max(&self) -> usize {
        *self.t_list.last().expect("validated non-empty")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&RawConfig::from_config(self)).expect("config is always representable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }
}

impl Serialize for ExperimentConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawConfig::from_config(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RawConfig::deserialize(d)?
            .into_config()
            .map_err(serde::de::Error::custom)
    }
}

/// TOML integers are signed 64-bit; larger seeds are written as strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Seed {
    Int(i64),
    Text(String),
}

impl Seed {
    fn from_u64(v: u64) -> Self {
        i64::try_from(v)
            .map(Seed::Int)
            .unwrap_or_else(|_| Seed::Text(v.to_string()))
    }

    fn to_u64(&self) -> Result<u64> {
        match self {
            Seed::Int(v) => u64::try_from(*v).map_err(|_| Error::Config(format!("negative seed {v}"))),
            Seed::Text(s) => s.parse().map_err(|_| Error::Config(format!("bad seed `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBm {
    q: f64,
    p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGbm {
    variant: GbmVariant,
    a: f64,
    b: f64,
    c: f64,
    sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBound {
    sigma_list: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    #[serde(default)]
    profile: Option<String>,
    t_list: Vec<usize>,
    #[serde(default)]
    t_eval: Option<usize>,
    #[serde(default)]
    reps: Option<usize>,
    #[serde(default)]
    master_seed: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bm: Option<RawBm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gbm: Option<RawGbm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<RawBound>,
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        let profile = match &self.profile {
            Some(s) => load_profile_spec(s)?,
            None => ProfileSpec::Constant(0.0),
        };
        let params = match (self.bm, self.gbm) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("use either [bm] or [gbm], not both".into()));
            }
            (Some(b), None) => EstimatorParams::Bm(BmEstimatorParams::new(b.q, b.p)?),
            (None, Some(g)) => EstimatorParams::Gbm(GbmEstimatorParams::new(g.a, g.b, g.c, g.sigma, g.variant)?),
            (None, None) => EstimatorParams::None,
        };
        Ok(ExperimentConfig {
            experiment: self.experiment,
            profile,
            t_eval: self.t_eval.unwrap_or(1),
            reps: self.reps.unwrap_or(self.experiment.default_reps()),
            master_seed: self.master_seed.map(|s| s.to_u64()).transpose()?.unwrap_or(0),
            t_list: self.t_list,
            params,
            sigma_list: self.bound.map(|b| b.sigma_list).unwrap_or_default(),
        })
    }

    fn from_config(c: &ExperimentConfig) -> Self {
        let (bm, gbm) = match c.params {
            EstimatorParams::Bm(b) => (Some(RawBm { q: b.q, p: b.p }), None),
            EstimatorParams::Gbm(g) => (
                None,
                Some(RawGbm {
                    variant: g.variant,
                    a: g.a,
                    b: g.b,
                    c: g.c,
                    sigma: g.sigma,
                }),
            ),
            EstimatorParams::None => (None, None),
        };
        RawConfig {
            experiment: c.experiment,
            profile: Some(c.profile.to_string()),
            t_list: c.t_list.clone(),
            t_eval: Some(c.t_eval),
            reps: Some(c.reps),
            master_seed: Some(Seed::from_u64(c.master_seed)),
            bm,
            gbm,
            bound: (!c.sigma_list.is_empty()).then(|| RawBound {
                sigma_list: c.sigma_list.clone(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "bm_consistency"
profile = "constant:0.5"
t_list = [500, 2000]
t_eval = 10
reps = 500
master_seed = 7

[bm]
q = 0.5
p = 1.0
"#;

    #[test]
    fn parse_sample() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.experiment, ExperimentKind::BmConsistency);
        assert_eq!(c.t_list, vec![500, 2000]);
        assert_eq!(c.params, EstimatorParams::Bm(BmEstimatorParams::new(0.5, 1.0).unwrap()));
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn large_seed_round_trips() {
        let mut c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        c.master_seed = u64::MAX;
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_invalid() {
        let swap = |from: &str, to: &str| ExperimentConfig::from_toml(&SAMPLE.replace(from, to));
        assert!(swap("[500, 2000]", "[]").is_err());
        assert!(swap("[500, 2000]", "[2000, 500]").is_err());
        assert!(swap("t_eval = 10", "t_eval = 501").is_err());
        assert!(swap("reps = 500", "reps = 1").is_err());
        assert!(swap("q = 0.5", "q = -0.5").is_err());
        assert!(swap("[bm]", "[gbm]").is_err());
        assert!(swap("reps = 500", "reps = 500\nbogus = 1").is_err());
        assert!(swap("bm_consistency", "nope").is_err());
    }

    #[test]
    fn defaults_apply() {
        let c = ExperimentConfig::from_toml(
            "experiment = \"exp_abs_bound\"\nt_list = [1, 4]\n[bound]\nsigma_list = [0.5]\n",
        )
        .unwrap();
        assert_eq!(c.reps, 500);
        assert_eq!(c.master_seed, 0);
        assert_eq!(c.params, EstimatorParams::None);
    }
}
