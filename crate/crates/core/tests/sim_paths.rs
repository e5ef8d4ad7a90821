use dyncorr::error::Error;
use dyncorr::paths::{simulate_bm_pair, simulate_bm_pair_with, simulate_gbm_pair, Coupling};
use dyncorr::profile::{increment_correlations, CorrelationProfile, ProfileSpec, TimeGrid};
use dyncorr::rng::replication_seed;
use dyncorr::stats::Summary;

fn build(spec: &str, n: usize) -> dyncorr::Result<CorrelationProfile> {
    CorrelationProfile::build(spec.parse()?, TimeGrid::new(n)?)
}

#[test]
fn constant_profile_increments() {
    let p = build("constant:0.5", 10).unwrap();
    assert!((1..=10).all(|t| p.rho(t) == 0.5));
    assert_eq!(increment_correlations(&p), vec![0.5; 10]);
}

#[test]
fn reciprocal_table_increments() {
    let values: Vec<f64> = (1..=5).map(|i| 0.3 / i as f64).collect();
    let p = CorrelationProfile::build(ProfileSpec::Table(values), TimeGrid::new(5).unwrap()).unwrap();
    let r = p.increment_correlations();
    assert!((r[0] - 0.3).abs() < 1e-15);
    assert!(r[1..].iter().all(|x| x.abs() < 1e-15));
}

#[test]
fn ramp_table_infeasible_at_six() {
    let values: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let err = CorrelationProfile::build(ProfileSpec::Table(values), TimeGrid::new(10).unwrap()).unwrap_err();
    match err {
        Error::IncrementInfeasible { index, value } => {
            assert_eq!(index, 6);
            assert!((value - 1.1).abs() < 1e-12);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn out_of_range_and_short_grid_rejected() {
    assert!(matches!(build("constant:1.2", 5), Err(Error::ProfileOutOfRange { .. })));
    assert!(matches!(TimeGrid::new(1), Err(Error::GridTooShort(1))));
    assert!(matches!(build("table:0.1,0.2", 3), Err(Error::TableLength { .. })));
}

#[test]
fn unit_and_zero_increments() {
    assert_eq!(build("constant:1", 7).unwrap().increment_correlations(), vec![1.0; 7]);
    assert_eq!(build("constant:0", 7).unwrap().increment_correlations(), vec![0.0; 7]);
}

#[test]
fn linear_ramp_increments() {
    let r = build("linear:0,0.05", 10).unwrap().increment_correlations();
    for (i, v) in r.iter().enumerate() {
        let i = (i + 1) as f64;
        assert!((v - 0.05 * (2.0 * i - 1.0)).abs() < 1e-14);
    }
    assert!((r[9] - 0.95).abs() < 1e-14);
}

#[test]
fn unit_profile_paths_identical() {
    let pair = simulate_bm_pair(&build("constant:1", 200).unwrap(), 99);
    assert_eq!(pair.x, pair.y);
    assert_eq!(pair.x.len(), 200);
    assert_eq!(pair.grid.len(), 200);
}

fn covariance_at(spec: &str, t: usize, reps: usize, coupling: Coupling) -> (Summary, Summary) {
    let p = build(spec, 10).unwrap();
    let mut prods = Vec::with_capacity(reps);
    let mut squares = Vec::with_capacity(reps);
    for rep in 0..reps {
        let pair = simulate_bm_pair_with(&p, replication_seed(2024, rep as u64), coupling);
        prods.push(pair.x_at(t) * pair.y_at(t));
        squares.push(pair.x_at(t) * pair.x_at(t));
    }
    (Summary::from_samples(&prods), Summary::from_samples(&squares))
}

#[test]
fn independent_profile_has_zero_covariance() {
    for t in [1, 5, 10] {
        let (cov, var) = covariance_at("constant:0", t, 5000, Coupling::XLeads);
        assert!(cov.within_se(0.0, 4.0), "t={t}: {cov:?}");
        assert!(var.within_se(t as f64, 4.0), "t={t}: {var:?}");
    }
}

#[test]
fn half_profile_covariance_matches_target() {
    for t in [1, 5, 10] {
        let (cov, var) = covariance_at("constant:0.5", t, 5000, Coupling::XLeads);
        assert!(cov.within_se(0.5 * t as f64, 4.0), "t={t}: {cov:?}");
        assert!(var.within_se(t as f64, 4.0), "t={t}: {var:?}");
    }
}

#[test]
fn swapped_coupling_has_same_law() {
    let p = build("linear:0.1,0.03", 10).unwrap();
    for t in [1, 5, 10] {
        let (cov, _) = covariance_at("linear:0.1,0.03", t, 5000, Coupling::YLeads);
        assert!(cov.within_se(t as f64 * p.rho(t), 4.0), "t={t}: {cov:?}");
        // Var(Y_t) under the swapped coupling.
        let ys: Vec<f64> = (0..5000)
            .map(|rep| {
                let pair = simulate_bm_pair_with(&p, replication_seed(77, rep), Coupling::YLeads);
                pair.y_at(t) * pair.y_at(t)
            })
            .collect();
        assert!(Summary::from_samples(&ys).within_se(t as f64, 4.0));
    }
}

#[test]
fn seeds_are_bitwise_reproducible() {
    let p = build("regime:0.5,0.2,10", 300).unwrap();
    let a = simulate_bm_pair(&p, 123);
    let b = simulate_bm_pair(&p, 123);
    assert_eq!(
        a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(a, b);
}

#[test]
fn gbm_transform_examples() {
    let p = build("constant:0.3", 5).unwrap();
    let mut bm = simulate_bm_pair(&p, 1);
    bm.x = vec![0.0; 5];
    bm.y = vec![0.0, 0.0, 2.0, 0.0, 0.0];
    let g = simulate_gbm_pair(&bm, 0.1).unwrap();
    assert_eq!(g.r_path, vec![1.0; 5]);
    assert!((g.s_path[2] - 1.221_402_758).abs() < 1e-9);
    assert_eq!(g.s_path[2], (0.1f64 * 2.0).exp());

    let unit = simulate_gbm_pair(&simulate_bm_pair(&build("constant:1", 50).unwrap(), 4), 0.2).unwrap();
    assert_eq!(unit.r_path, unit.s_path);
}

#[test]
fn gbm_positivity_and_mean_level() {
    let p = build("constant:0.5", 10).unwrap();
    let sigma = 0.3;
    let mut levels = Vec::new();
    for rep in 0..5000 {
        let g = simulate_gbm_pair(&simulate_bm_pair(&p, replication_seed(5, rep)), sigma).unwrap();
        assert!(g.r_path.iter().chain(&g.s_path).all(|&v| v > 0.0));
        levels.push(g.r_path[9]);
    }
    // E(R_t) = e^{σ²t/2}
    let s = Summary::from_samples(&levels);
    assert!(s.within_se((sigma * sigma * 10.0 / 2.0).exp(), 4.0), "{s:?}");
}
