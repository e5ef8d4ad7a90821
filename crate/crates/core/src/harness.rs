//! Seeded Monte Carlo experiments comparing estimator output with the exact
//! expectation oracles, plus moment and bound checks.
//!
//! Replications run in parallel on the rayon pool but are collected in
//! replication order, so the report does not depend on scheduling.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bm::{estimate_bm, expected_gamma_bm, expected_ratio_q, expected_sigma_sq_bm, BmEstimatorParams};
use crate::config::{EstimatorParams, ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::gbm::{estimate_gbm, gbm_expectation, level_correlation, GbmEstimatorParams};
use crate::numeric::normal_cdf;
use crate::paths::{exponentiate, simulate_bm_pair};
use crate::profile::{CorrelationProfile, ProfileSpec, TimeGrid};
use crate::rng::{cell_replication_seed, cell_seed, rng_from_seed, SEED_SCHEME};
use crate::stats::{iqr, variance_std_error, Summary};
use crate::vg::{product_normal_vg_params, vg_moments};

/// Standard-error multiplier for oracle comparisons.
pub const SE_RULE: f64 = 4.0;

/// Tolerance for deterministic trend comparisons.
pub const TREND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

/// Exact expectations for one `(T, t)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellOracle {
    pub expected_gamma: f64,
    pub expected_sigma_sq: f64,
    pub expected_ratio: f64,
}

/// Statistics of one `(T, t)` cell. For geometric experiments the `x`/`y`
/// variance fields refer to `W`/`U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub len: usize,
    pub t: usize,
    pub seed: u64,
    pub target_rho: f64,
    pub gamma_hat: Summary,
    pub sigma_x_sq_hat: Summary,
    pub sigma_y_sq_hat: Summary,
    pub rho_hat: Summary,
    pub rho_hat_iqr: f64,
    /// Replications whose ratio was undefined (zero or negative variance).
    pub rho_undefined: usize,
    pub oracle: Option<CellOracle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub t: usize,
    pub rho_t: f64,
    pub product: Summary,
    pub product_target: f64,
    pub second_moment: Summary,
    pub second_moment_target: f64,
    pub scaled_variance: f64,
    pub scaled_variance_se: f64,
    pub scaled_variance_target: f64,
    pub vg_mean: f64,
    pub vg_second_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub sigma: f64,
    pub t: usize,
    pub seed: u64,
    pub sample: Summary,
    pub bound: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub scheme: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub theorem_range: bool,
    pub cells: Vec<McCell>,
    pub moment_rows: Vec<MomentRow>,
    pub bound_rows: Vec<BoundRow>,
    pub assertions: Vec<Assertion>,
    pub seeds: SeedInfo,
    pub runtime_seconds: f64,
}

impl McReport {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    /// The report with wall-clock fields zeroed.
    pub fn without_timing(&self) -> Self {
        Self {
            runtime_seconds: 0.0,
            ..self.clone()
        }
    }
}

fn replicate<T, F>(reps: usize, par: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match par {
        Parallelism::Serial => (0..reps).map(f).collect(),
        Parallelism::Parallel => (0..reps).into_par_iter().map(f).collect(),
    }
}

fn build_profile(spec: &ProfileSpec, len: usize) -> Result<CorrelationProfile> {
    CorrelationProfile::build(spec.clone(), TimeGrid::new(len)?)
}

struct RepEstimate {
    gamma: f64,
    sx: f64,
    sy: f64,
    rho: Option<f64>,
}

fn summarise_cell(
    len: usize,
    t: usize,
    seed: u64,
    target_rho: f64,
    reps: Vec<RepEstimate>,
    oracle: Option<CellOracle>,
) -> McCell {
    let col = |f: fn(&RepEstimate) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    let rhos: Vec<f64> = reps.iter().filter_map(|r| r.rho).collect();
    McCell {
        len,
        t,
        seed,
        target_rho,
        gamma_hat: Summary::from_samples(&col(|r| r.gamma)),
        sigma_x_sq_hat: Summary::from_samples(&col(|r| r.sx)),
        sigma_y_sq_hat: Summary::from_samples(&col(|r| r.sy)),
        rho_hat: Summary::from_samples(&rhos),
        rho_hat_iqr: iqr(&rhos),
        rho_undefined: reps.len() - rhos.len(),
        oracle,
    }
}

fn collect_reps(len: usize, results: Vec<Result<RepEstimate>>) -> Result<Vec<RepEstimate>> {
    results
        .into_iter()
        .enumerate()
        .map(|(rep, r)| {
            r.map_err(|e| Error::Replication {
                len,
                rep,
                source: Box::new(e),
            })
        })
        .collect()
}

fn bm_cell(
    spec: &ProfileSpec,
    len: usize,
    t: usize,
    params: BmEstimatorParams,
    reps: usize,
    master: u64,
    par: Parallelism,
) -> Result<McCell> {
    let profile = build_profile(spec, len)?;
    let results = replicate(reps, par, |rep| {
        let pair = simulate_bm_pair(&profile, cell_replication_seed(master, len as u64, rep as u64));
        let e = estimate_bm(&pair.x, &pair.y, t, params)?;
        Ok(RepEstimate {
            gamma: e.gamma_hat,
            sx: e.sigma_x_sq_hat,
            sy: e.sigma_y_sq_hat,
            rho: e.rho_hat,
        })
    });
    let reps = collect_reps(len, results)?;
    let oracle = CellOracle {
        expected_gamma: expected_gamma_bm(&profile, t, params, len)?,
        expected_sigma_sq: expected_sigma_sq_bm(t, params, len)?,
        expected_ratio: expected_ratio_q(&profile, t, params, len)?,
    };
    Ok(summarise_cell(
        len,
        t,
        cell_seed(master, len as u64),
        profile.rho(t),
        reps,
        Some(oracle),
    ))
}

fn gbm_cell(
    spec: &ProfileSpec,
    len: usize,
    t: usize,
    params: GbmEstimatorParams,
    reps: usize,
    master: u64,
    par: Parallelism,
) -> Result<McCell> {
    let profile = build_profile(spec, len)?;
    let results = replicate(reps, par, |rep| {
        let pair = simulate_bm_pair(&profile, cell_replication_seed(master, len as u64, rep as u64));
        // Reject overflow exactly as path export would.
        exponentiate(&pair.x, &pair.y, params.sigma)?;
        let e = estimate_gbm(&pair.x, &pair.y, t, &params)?;
        Ok(RepEstimate {
            gamma: e.gamma_hat,
            sx: e.sigma_w_sq_hat,
            sy: e.sigma_u_sq_hat,
            rho: e.rho_hat,
        })
    });
    let reps = collect_reps(len, results)?;
    let ex = gbm_expectation(&profile, t, &params, len)?;
    let oracle = CellOracle {
        expected_gamma: ex.gamma,
        expected_sigma_sq: ex.sigma_sq,
        expected_ratio: ex.ratio(),
    };
    let target = level_correlation(&profile, params.sigma, t)?;
    Ok(summarise_cell(
        len,
        t,
        cell_seed(master, len as u64),
        target,
        reps,
        Some(oracle),
    ))
}

fn oracle_assertions(cells: &[McCell], out: &mut Vec<Assertion>) {
    for c in cells {
        let Some(o) = c.oracle else { continue };
        for (what, s, target) in [
            ("gamma", &c.gamma_hat, o.expected_gamma),
            ("sigma_x_sq", &c.sigma_x_sq_hat, o.expected_sigma_sq),
            ("sigma_y_sq", &c.sigma_y_sq_hat, o.expected_sigma_sq),
        ] {
            out.push(Assertion::new(
                format!("oracle_{what}[T={}]", c.len),
                s.within_se(target, SE_RULE),
                format!("mean {:e}, oracle {:e}, z = {:.3}", s.mean, target, s.z_score(target)),
            ));
        }
    }
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn non_increasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol)
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(", ")
}

fn trend_assertions(cells: &[McCell], out: &mut Vec<Assertion>) {
    let gaps: Vec<f64> = cells
        .iter()
        .filter_map(|c| c.oracle.map(|o| (o.expected_ratio - c.target_rho).abs()))
        .collect();
    out.push(Assertion::new(
        "ratio_gap_non_increasing",
        non_increasing(&gaps, TREND_TOL),
        format!("|Q - rho| over T: {}", fmt_list(&gaps)),
    ));
    let spread: Vec<f64> = cells.iter().map(|c| c.rho_hat_iqr).collect();
    out.push(Assertion::new(
        "rho_iqr_strictly_decreasing",
        strictly_decreasing(&spread),
        format!("IQR of rho_hat over T: {}", fmt_list(&spread)),
    ));
    if let (Some(first), Some(last)) = (cells.first(), cells.last()) {
        let gap = |c: &McCell| (c.rho_hat.mean - c.target_rho).abs();
        let slack = SE_RULE * first.rho_hat.std_error.hypot(last.rho_hat.std_error);
        out.push(Assertion::new(
            "rho_mean_gap_not_growing",
            gap(last) <= gap(first) + slack,
            format!("|mean - rho|: {:e} -> {:e} (slack {:e})", gap(first), gap(last), slack),
        ));
    }
}

/// `Var(T_last) ≤ 2 (T_first/T_last) Var(T_first)`: an `O(1/T)` decay with
/// a factor-two allowance.
fn decay_assertion(cells: &[McCell], out: &mut Vec<Assertion>) {
    let (Some(first), Some(last)) = (cells.first(), cells.last()) else {
        return;
    };
    if first.len == last.len {
        return;
    }
    let factor = 2.0 * first.len as f64 / last.len as f64;
    let (v0, v1) = (first.gamma_hat.variance, last.gamma_hat.variance);
    out.push(Assertion::new(
        "gamma_variance_decay",
        v1 <= factor * v0,
        format!(
            "Var at T={}: {v0:e}; at T={}: {v1:e}; allowed {:e}",
            first.len,
            last.len,
            factor * v0
        ),
    ));
    let vars: Vec<f64> = cells.iter().map(|c| c.gamma_hat.variance).collect();
    out.push(Assertion::new(
        "gamma_variance_strictly_decreasing",
        strictly_decreasing(&vars),
        format!("Var over T: {}", fmt_list(&vars)),
    ));
}

fn bias_assertions(cells: &[McCell], out: &mut Vec<Assertion>) {
    let Some(last) = cells.last() else { return };
    let Some(o) = last.oracle else { return };
    let se = last.rho_hat.std_error;
    let delta = (o.expected_ratio - last.target_rho).abs() - 3.0 * se;
    let gap = (last.rho_hat.mean - last.target_rho).abs();
    out.push(Assertion::new(
        "bias_above_oracle_gap",
        gap > delta,
        format!("|mean - rho| = {gap:e}, delta = |Q - rho| - 3 SE = {delta:e}"),
    ));
    out.push(Assertion::new(
        "bias_exceeds_3se",
        gap > 3.0 * se,
        format!("|mean - rho| = {gap:e}, 3 SE = {:e}", 3.0 * se),
    ));
}

/// Runs an experiment on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McReport> {
    run_experiment_with(config, Parallelism::Parallel)
}

pub fn run_experiment_with(config: &ExperimentConfig, par: Parallelism) -> Result<McReport> {
    config.validate()?;
    let start = Instant::now();
    let kind = config.experiment;
    let mut cells = Vec::new();
    let mut moment_rows = Vec::new();
    let mut bound_rows = Vec::new();
    let mut assertions = Vec::new();
    let theorem_range = match config.params {
        EstimatorParams::Bm(p) => {
            let r = p.theorem_range();
            r.consistency && r.variance_decay
        }
        EstimatorParams::Gbm(p) => p.theorem_range(),
        EstimatorParams::None => true,
    };
    match (kind, config.params) {
        (_, EstimatorParams::Bm(p)) => {
            for &len in &config.t_list {
                cells.push(bm_cell(
                    &config.profile,
                    len,
                    config.t_eval,
                    p,
                    config.reps,
                    config.master_seed,
                    par,
                )?);
            }
        }
        (_, EstimatorParams::Gbm(p)) => {
            for &len in &config.t_list {
                cells.push(gbm_cell(
                    &config.profile,
                    len,
                    config.t_eval,
                    p,
                    config.reps,
                    config.master_seed,
                    par,
                )?);
            }
        }
        (ExperimentKind::MomentChecks, EstimatorParams::None) => {
            let r = product_moments_with(&config.profile, &config.t_list, config.reps, config.master_seed, par)?;
            moment_rows = r.rows;
            assertions.extend(r.assertions);
        }
        (ExperimentKind::ExpAbsBound, EstimatorParams::None) => {
            let r = exp_abs_bound_with(&config.sigma_list, &config.t_list, config.reps, config.master_seed, par)?;
            bound_rows = r.rows;
            assertions.extend(r.assertions);
        }
        _ => unreachable!("validated config"),
    }
    oracle_assertions(&cells, &mut assertions);
    match kind {
        ExperimentKind::BmConsistency | ExperimentKind::GbmConsistencyV1 | ExperimentKind::GbmConsistencyV2 => {
            trend_assertions(&cells, &mut assertions)
        }
        ExperimentKind::BmVarianceDecay | ExperimentKind::GbmVarianceDecay => decay_assertion(&cells, &mut assertions),
        ExperimentKind::BmBiasPq0 => bias_assertions(&cells, &mut assertions),
        ExperimentKind::MomentChecks | ExperimentKind::ExpAbsBound => {}
    }
    Ok(McReport {
        experiment: kind,
        config: config.clone(),
        theorem_range,
        cells,
        moment_rows,
        bound_rows,
        assertions,
        seeds: SeedInfo {
            master_seed: config.master_seed,
            scheme: SEED_SCHEME.to_string(),
        },
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    pub assertions: Vec<Assertion>,
}

/// Product moments of the simulated pair at each `t`: `E(X_tY_t) = tρ_t`,
/// `E((X_tY_t)²) = (1+2ρ_t²)t²`, `Var(X_tY_t/t²) = (1+ρ_t²)/t²`, and the
/// variance-gamma law of the product.
pub fn check_product_moments(spec: &ProfileSpec, t_list: &[usize], reps: usize, seed: u64) -> Result<MomentReport> {
    product_moments_with(spec, t_list, reps, seed, Parallelism::Parallel)
}

fn product_moments_with(
    spec: &ProfileSpec,
    t_list: &[usize],
    reps: usize,
    seed: u64,
    par: Parallelism,
) -> Result<MomentReport> {
    let horizon = t_list.iter().copied().max().unwrap_or(2).max(2);
    let profile = build_profile(spec, horizon)?;
    let samples: Vec<Vec<f64>> = replicate(reps, par, |rep| {
        let pair = simulate_bm_pair(&profile, cell_replication_seed(seed, horizon as u64, rep as u64));
        t_list.iter().map(|&t| pair.x_at(t) * pair.y_at(t)).collect()
    });
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    for (j, &t) in t_list.iter().enumerate() {
        let tf = t as f64;
        let rho = profile.rho(t);
        let z: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let scaled: Vec<f64> = z.iter().map(|v| v / (tf * tf)).collect();
        let squares: Vec<f64> = z.iter().map(|v| v * v).collect();
        let product = Summary::from_samples(&z);
        let second = Summary::from_samples(&squares);
        let scaled_sum = Summary::from_samples(&scaled);
        let scaled_se = variance_std_error(&scaled);
        let vg = product_normal_vg_params(tf.sqrt(), tf.sqrt(), rho)?;
        let (vg_mean, vg_var) = vg_moments(&vg);
        let row = MomentRow {
            t,
            rho_t: rho,
            product,
            product_target: tf * rho,
            second_moment: second,
            second_moment_target: (1.0 + 2.0 * rho * rho) * tf * tf,
            scaled_variance: scaled_sum.variance,
            scaled_variance_se: scaled_se,
            scaled_variance_target: (1.0 + rho * rho) / (tf * tf),
            vg_mean,
            vg_second_moment: vg_var + vg_mean * vg_mean,
        };
        assertions.push(Assertion::new(
            format!("product_mean[t={t}]"),
            row.product.within_se(row.product_target, SE_RULE),
            format!("mean {:e}, target {:e}", row.product.mean, row.product_target),
        ));
        assertions.push(Assertion::new(
            format!("product_second_moment[t={t}]"),
            row.second_moment.within_se(row.second_moment_target, SE_RULE),
            format!(
                "mean {:e}, target {:e}",
                row.second_moment.mean, row.second_moment_target
            ),
        ));
        assertions.push(Assertion::new(
            format!("scaled_product_variance[t={t}]"),
            (row.scaled_variance - row.scaled_variance_target).abs() <= SE_RULE * scaled_se,
            format!(
                "var {:e}, target {:e}, SE {:e}",
                row.scaled_variance, row.scaled_variance_target, scaled_se
            ),
        ));
        assertions.push(Assertion::new(
            format!("vg_product_law[t={t}]"),
            row.product.within_se(vg_mean, SE_RULE) && row.second_moment.within_se(row.vg_second_moment, SE_RULE),
            format!("VG mean {vg_mean:e}, VG second moment {:e}", row.vg_second_moment),
        ));
        rows.push(row);
    }
    Ok(MomentReport { rows, assertions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub assertions: Vec<Assertion>,
}

/// `E(e^{σ|W_t|}) = 2e^{σ²t/2}(1 − Φ(−σ√t))`.
pub fn exp_abs_exact(sigma: f64, t: f64) -> f64 {
    2.0 * (sigma * sigma * t / 2.0).exp() * (1.0 - normal_cdf(-sigma * t.sqrt()))
}

/// Checks `E(e^{σ|W_t|}) ≤ 2e^{σ²t/2}` and the exact value by simulation.
pub fn check_exp_abs_bound(sigma_list: &[f64], t_list: &[usize], reps: usize, seed: u64) -> Result<BoundReport> {
    exp_abs_bound_with(sigma_list, t_list, reps, seed, Parallelism::Parallel)
}

fn exp_abs_bound_with(
    sigma_list: &[f64],
    t_list: &[usize],
    reps: usize,
    seed: u64,
    par: Parallelism,
) -> Result<BoundReport> {
    if reps < 2 {
        return Err(Error::InvalidParameter(format!("reps must be >= 2, got {reps}")));
    }
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    for (i, &sigma) in sigma_list.iter().enumerate() {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        for (j, &t) in t_list.iter().enumerate() {
            if t == 0 {
                return Err(Error::InvalidParameter("t must be >= 1".into()));
            }
            let stream = ((i as u64) << 32) | j as u64;
            let sd = (t as f64).sqrt();
            let draws = replicate(reps, par, |rep| {
                let mut rng = rng_from_seed(cell_replication_seed(seed, stream, rep as u64));
                let z: f64 = rng.sample(StandardNormal);
                (sigma * sd * z.abs()).exp()
            });
            let sample = Summary::from_samples(&draws);
            let bound = 2.0 * (sigma * sigma * t as f64 / 2.0).exp();
            let exact = exp_abs_exact(sigma, t as f64);
            let rel_se = sample.std_error / sample.mean;
            assertions.push(Assertion::new(
                format!("exp_abs_bound[sigma={sigma},t={t}]"),
                sample.mean <= bound * (1.0 + 3.0 * rel_se),
                format!("mean {:e}, bound {bound:e}", sample.mean),
            ));
            assertions.push(Assertion::new(
                format!("exp_abs_exact[sigma={sigma},t={t}]"),
                sample.within_se(exact, SE_RULE),
                format!(
                    "mean {:e}, exact {exact:e}, z = {:.3}",
                    sample.mean,
                    sample.z_score(exact)
                ),
            ));
            rows.push(BoundRow {
                sigma,
                t,
                seed: cell_seed(seed, stream),
                sample,
                bound,
                exact,
            });
        }
    }
    Ok(BoundReport { rows, assertions })
}
