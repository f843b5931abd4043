mod common;

use nalgebra::{Complex, DMatrix, DVector};
use oob_covariance::covariance::{synthesize_multicluster, theoretical_covariance};
use oob_covariance::translation::{cluster_count, nnls, robustify, translate, TranslationParams};
use oob_covariance::{CMat, CovarianceMatrix, PasKind, Side, UlaGeometry};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn two_cluster_cov(n: usize, a: f64, b: f64, p: f64, noise: f64) -> CovarianceMatrix<f64> {
    let g = UlaGeometry::new(n, 0.5).unwrap();
    let ra = theoretical_covariance(PasKind::TruncatedGaussian, a, 0.04, &g).unwrap();
    let rb = theoretical_covariance(PasKind::TruncatedGaussian, b, 0.04, &g).unwrap();
    synthesize_multicluster(&[(p, &ra), (1.0 - p, &rb)], Some(noise)).unwrap()
}

#[test]
fn cluster_count_is_monotone_and_positive() {
    let mut prev = 0;
    for p in 0..2000 {
        let c = cluster_count(p);
        assert!(c >= 1 && c >= prev);
        prev = c;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn robustify_is_idempotent(seed in any::<u64>(), len in 1usize..5, point in any::<bool>()) {
        let mut rng = common::rng(seed);
        let g = UlaGeometry::new(8, 0.5).unwrap();
        let r = common::random_psd(8, 3, Side::Rx, &mut rng);
        let raw: Vec<(f64, f64)> = (0..len).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..0.6))).collect();
        let once = robustify(&raw, &r, 0.26, &g, point).unwrap();
        let twice = robustify(&once, &r, 0.26, &g, point).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn translate_is_scale_equivariant(a in -0.9f64..-0.1, b in 0.1f64..0.9, p in 0.2f64..0.8, c in 0.05f64..20.0) {
        let r = two_cluster_cov(8, a, b, p, 0.01);
        let params = TranslationParams::default();
        let sub6 = UlaGeometry::new(8, 0.5).unwrap();
        let mm = UlaGeometry::new(64, 0.5).unwrap();
        let base = translate(&r, &sub6, &mm, &params).unwrap();
        let scaled = translate(&r.scaled(c), &sub6, &mm, &params).unwrap();
        prop_assert_eq!(base.estimates.len(), scaled.estimates.len());
        for (x, y) in base.estimates.iter().zip(&scaled.estimates) {
            prop_assert!((x.mean_angle - y.mean_angle).abs() < 1e-8);
            prop_assert!((x.spread - y.spread).abs() < 1e-8);
            prop_assert!((y.power - c * x.power).abs() <= 1e-6 * (1.0 + c * x.power));
            prop_assert!(x.spread >= 0.0 && x.power >= 0.0);
        }
        prop_assert!((scaled.noise_var - c * base.noise_var).abs() <= 1e-6 * (1.0 + c * base.noise_var));
        let want = base.mmwave_cov.mat() * Complex::new(c, 0.0);
        prop_assert!((scaled.mmwave_cov.mat() - &want).norm() <= 1e-6 * want.norm());
    }

    #[test]
    fn nnls_recovers_constructed_solutions(seed in any::<u64>(), m in 6usize..30, n in 1usize..6) {
        let mut rng = common::rng(seed);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>() - 0.5);
        let x = DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random_range(0.1..2.0) });
        let got = nnls(&a, &(&a * &x)).unwrap();
        prop_assert!((got - x).amax() < 1e-8);
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Noisy single-cluster sample covariance over `t` snapshots at linear SNR
/// `snr`, 100 rays drawn around `mean` with standard deviation `spread`.
fn sample_covariance<R: Rng>(mean: f64, spread: f64, snr: f64, t: usize, rng: &mut R) -> CovarianceMatrix<f64> {
    let g = UlaGeometry::new(8, 0.5).unwrap();
    let rays: Vec<f64> = (0..100).map(|_| mean + spread * normal(rng)).collect();
    let steer = g.response_matrix(&rays) * Complex::new(8f64.sqrt(), 0.0);
    let mut acc = CMat::zeros(8, 8);
    let cn = |rng: &mut R, var: f64| {
        let s = (var / 2.0).sqrt();
        Complex::new(s * normal(rng), s * normal(rng))
    };
    for _ in 0..t {
        let gains = nalgebra::DVector::from_fn(rays.len(), |_, _| cn(rng, snr / rays.len() as f64));
        let noise = nalgebra::DVector::from_fn(8, |_, _| cn(rng, 1.0));
        let x = &steer * gains + noise;
        acc += &x * x.adjoint();
    }
    CovarianceMatrix::new(acc / Complex::new(t as f64, 0.0), Side::Rx).unwrap()
}

#[test]
fn single_cluster_angle_accuracy() {
    let mut rng = common::rng(77);
    let sub6 = UlaGeometry::new(8, 0.5).unwrap();
    let mm = UlaGeometry::new(64, 0.5).unwrap();
    let trials = 200;
    let mut hits = 0;
    for _ in 0..trials {
        let mean: f64 = rng.random_range(-0.8..0.8);
        let spread = rng.random_range(1f64..6.0).to_radians();
        let r = sample_covariance(mean, spread, 10.0, 30, &mut rng);
        let params = TranslationParams { num_snapshots: 30, ..TranslationParams::default() };
        let res = translate(&r, &sub6, &mm, &params).unwrap();
        let best = res.estimates.iter().max_by(|x, y| x.power.total_cmp(&y.power)).unwrap();
        if (best.mean_angle - mean).abs() < 2f64.to_radians() {
            hits += 1;
        }
    }
    assert!(hits * 10 >= trials * 9, "{hits} of {trials} within 2 degrees");
}

#[test]
fn pure_noise_input_is_handled() {
    let sub6 = UlaGeometry::new(8, 0.5).unwrap();
    let mm = UlaGeometry::new(64, 0.5).unwrap();
    let r = CovarianceMatrix::identity(8, Side::Rx).scaled(0.3);
    let res = translate(&r, &sub6, &mm, &TranslationParams::default()).unwrap();
    assert_eq!(res.num_clusters, 1);
    assert!(common::min_eig_ratio(&res.mmwave_cov) >= -1e-8);
}
