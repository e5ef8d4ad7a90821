use std::f64::consts::PI;

use dyncorr::bessel::{bessel_k, SERIES_CROSSOVER};
use dyncorr::paths::simulate_bm_pair;
use dyncorr::profile::{CorrelationProfile, TimeGrid};
use dyncorr::rng::replication_seed;
use dyncorr::stats::Summary;
use dyncorr::vg::{product_normal_vg_params, quadrature_moments, vg_moments, vg_pdf, VgParams};

/// `K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(νt) dt` by the trapezoid rule, which
/// converges geometrically for this doubly-exponentially decaying integrand.
fn k_integral(nu: f64, x: f64) -> f64 {
    let h = 0.002;
    let mut total = 0.5 * (-x).exp();
    let mut i = 1;
    loop {
        let t = i as f64 * h;
        let a = -x * t.cosh();
        let term = 0.5 * ((a + nu * t).exp() + (a - nu * t).exp());
        total += term;
        if a + nu * t < -750.0 {
            break;
        }
        i += 1;
    }
    total * h
}

fn vg(r: f64, theta: f64, sigma: f64, mu: f64) -> VgParams {
    VgParams::new(r, theta, sigma, mu).unwrap()
}

#[test]
fn half_order_closed_form() {
    for x in [1.0, 2.0, 5.0] {
        let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
        let got = bessel_k(0.5, x).unwrap();
        assert!((got - exact).abs() <= 1e-13 * exact, "x={x}");
    }
}

#[test]
fn k0_at_one_matches_integral() {
    let reference = k_integral(0.0, 1.0);
    assert!((reference - 0.421_024_438_240_708_3).abs() < 1e-15);
    assert!((bessel_k(0.0, 1.0).unwrap() - reference).abs() <= 1e-14 * reference);
}

#[test]
fn ten_significant_digits_over_grid() {
    for &nu in &[0.0, 0.25, 0.5, 1.0, 1.7, 2.5, 3.0, 4.2, 5.0] {
        for &x in &[
            1e-6,
            1e-3,
            0.1,
            0.5,
            1.0,
            1.99,
            SERIES_CROSSOVER,
            2.01,
            5.0,
            10.0,
            25.0,
            50.0,
        ] {
            let reference = k_integral(nu, x);
            let got = bessel_k(nu, x).unwrap();
            assert!(
                (got - reference).abs() <= 1e-10 * reference,
                "nu={nu} x={x}: {got} vs {reference}"
            );
        }
    }
}

#[test]
fn positive_and_decreasing() {
    for &nu in &[0.0, 0.3, 1.0, 2.5, 5.0] {
        let values: Vec<f64> = (1..=200).map(|i| bessel_k(nu, i as f64 * 0.1).unwrap()).collect();
        assert!(values.iter().all(|&v| v > 0.0));
        assert!(values.windows(2).all(|w| w[1] < w[0]), "nu={nu}");
    }
}

#[test]
fn bessel_domain_errors() {
    assert!(bessel_k(0.0, 0.0).is_err());
    assert!(bessel_k(1.0, -1.0).is_err());
}

#[test]
fn standard_product_density_value() {
    let v = vg_pdf(1.0, &vg(1.0, 0.0, 1.0, 0.0)).unwrap();
    assert!((v - k_integral(0.0, 1.0) / PI).abs() < 1e-15);
}

#[test]
fn symmetric_density_when_theta_zero() {
    for p in [vg(1.0, 0.0, 1.0, 0.0), vg(2.5, 0.0, 0.7, 1.3), vg(0.4, 0.0, 2.0, -3.0)] {
        for i in 1..50 {
            let x = i as f64 * 0.17;
            let a = vg_pdf(p.mu + x, &p).unwrap();
            let b = vg_pdf(p.mu - x, &p).unwrap();
            assert!((a - b).abs() <= 1e-14 * a, "{p:?} x={x}");
        }
    }
}

#[test]
fn centre_point_rules() {
    assert!(vg_pdf(0.0, &vg(1.0, 0.0, 1.0, 0.0)).is_err());
    assert!(vg_pdf(2.0, &vg(0.5, 0.3, 1.0, 2.0)).is_err());
    // r > 1 is finite at the centre and continuous there.
    let p = vg(3.0, 0.2, 0.8, 0.5);
    let centre = vg_pdf(0.5, &p).unwrap();
    let near = vg_pdf(0.5 + 1e-7, &p).unwrap();
    assert!((centre - near).abs() < 1e-5 * centre);
}

fn parameter_grid() -> Vec<VgParams> {
    vec![
        vg(1.0, 0.0, 1.0, 0.0),
        vg(1.0, 0.5, 0.866_025_403_784_438_6, 0.0),
        vg(2.0, -1.0, 3.0, 4.0),
        vg(0.5, 0.2, 1.0, -1.0),
        vg(3.0, 0.0, 0.5, 2.0),
        vg(5.0, 0.8, 1.5, 0.0),
        vg(1.0, -2.0, 1.0, 0.3),
    ]
}

#[test]
fn density_integrates_to_one() {
    for p in parameter_grid() {
        let q = quadrature_moments(&p).unwrap();
        assert!((q.mass - 1.0).abs() < 1e-6, "{p:?}: {}", q.mass);
    }
}

#[test]
fn quadrature_moments_match_closed_form() {
    for p in parameter_grid() {
        let q = quadrature_moments(&p).unwrap();
        let (mean, var) = vg_moments(&p);
        let mean_err = if mean == 0.0 {
            q.mean.abs()
        } else {
            ((q.mean - mean) / mean).abs()
        };
        assert!(mean_err < 1e-5, "{p:?}: mean {} vs {mean}", q.mean);
        assert!(
            ((q.variance - var) / var).abs() < 1e-5,
            "{p:?}: var {} vs {var}",
            q.variance
        );
    }
}

#[test]
fn closed_form_moment_examples() {
    assert_eq!(vg_moments(&vg(1.0, 0.0, 1.0, 0.0)), (0.0, 1.0));
    assert_eq!(vg_moments(&vg(1.0, 0.5, 1.0, 0.0)), (0.5, 1.5));
    assert_eq!(vg_moments(&vg(2.0, -1.0, 3.0, 4.0)), (2.0, 22.0));
}

#[test]
fn product_parameter_examples() {
    let p = product_normal_vg_params(1.0, 1.0, 0.0).unwrap();
    assert_eq!(p, vg(1.0, 0.0, 1.0, 0.0));
    assert_eq!(vg_moments(&p).0, 0.0);

    let p = product_normal_vg_params(1.0, 1.0, 0.5).unwrap();
    assert_eq!((p.r, p.theta, p.mu), (1.0, 0.5, 0.0));
    assert!((p.sigma - 0.75f64.sqrt()).abs() < 1e-15);
    let (mean, var) = vg_moments(&p);
    assert_eq!(mean, 0.5);
    assert!((var - 1.25).abs() < 1e-15);
    assert!((var + mean * mean - 1.5).abs() < 1e-15);

    let p = product_normal_vg_params(2.0, 3.0, 1.0).unwrap();
    assert!(p.is_degenerate());
    assert_eq!(vg_moments(&p), (6.0, 72.0));

    assert!(product_normal_vg_params(1.0, 1.0, 1.01).is_err());
}

#[test]
fn simulated_product_matches_vg_law() {
    let p = CorrelationProfile::build("linear:0.1,0.03".parse().unwrap(), TimeGrid::new(10).unwrap()).unwrap();
    for t in [1, 5, 10] {
        let prods: Vec<f64> = (0..20_000)
            .map(|rep| {
                let pair = simulate_bm_pair(&p, replication_seed(42, rep));
                pair.x_at(t) * pair.y_at(t)
            })
            .collect();
        let root = (t as f64).sqrt();
        let law = product_normal_vg_params(root, root, p.rho(t)).unwrap();
        let (mean, var) = vg_moments(&law);
        let first = Summary::from_samples(&prods);
        assert!(first.within_se(mean, 4.0), "t={t}: {first:?} vs {mean}");
        let squares: Vec<f64> = prods.iter().map(|z| z * z).collect();
        let second = Summary::from_samples(&squares);
        assert!(second.within_se(var + mean * mean, 4.0), "t={t}: {second:?}");
    }
}
