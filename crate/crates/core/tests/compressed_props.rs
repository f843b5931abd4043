mod common;

use nalgebra::Complex;
use oob_covariance::compressed::{
    build_dictionary, collect_snapshots, lw_dcomp, omni_precoder_pair, random_combiner, PriorWeights,
};
use oob_covariance::linalg::pinv;
use oob_covariance::{CMat, CVec, Dictionary, PhaseCodebook, Side, SnapshotSet, UlaGeometry};
use proptest::prelude::*;
use rand::Rng;

const N: usize = 16;
const M: usize = 4;
const N_TX: usize = 4;

/// Snapshots of a fixed few-path channel with random phase-shifter combiners.
fn snapshots(seed: u64, paths: usize, t: usize, noise_var: f64) -> (SnapshotSet<f64>, Dictionary<f64>) {
    let mut rng = common::rng(seed);
    let rx = UlaGeometry::new(N, 0.5).unwrap();
    let tx = UlaGeometry::new(N_TX, 0.5).unwrap();
    let mut h = CMat::zeros(N, N_TX);
    for _ in 0..paths {
        let g = Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 4.0;
        h += rx.array_response(rng.random_range(-1.2..1.2)) * tx.array_response(rng.random_range(-1.2..1.2)).adjoint() * g;
    }
    let cb = PhaseCodebook::new(2).unwrap();
    let combiners = (0..t).map(|_| random_combiner(N, M, &cb, &mut rng)).collect();
    let snaps = collect_snapshots(|_, x: &CVec<f64>| &h * x, combiners, N_TX, noise_var, Side::Rx, &mut rng).unwrap();
    (snaps, build_dictionary(&rx, 2).unwrap())
}

fn residual_sum(snaps: &SnapshotSet<f64>, dict: &Dictionary<f64>, support: &[usize]) -> f64 {
    snaps
        .received
        .iter()
        .zip(&snaps.combiners)
        .map(|(y, w)| {
            let ryy = y * y.adjoint();
            if support.is_empty() {
                return ryy.norm();
            }
            let phi = w.adjoint() * dict.select(support);
            let p = pinv(&phi).unwrap();
            (&ryy - &phi * (&p * &ryy * p.adjoint()) * phi.adjoint()).norm()
        })
        .sum()
}

/// Plain DCOMP written out directly: greedy selection on the data term only.
fn reference_support(snaps: &SnapshotSet<f64>, dict: &Dictionary<f64>) -> Vec<usize> {
    let threshold: f64 = 2.0 * snaps.noise_var * snaps.combiners.iter().map(|w| (w.adjoint() * w).norm()).sum::<f64>();
    let mut support = Vec::new();
    while residual_sum(snaps, dict, &support) > threshold && support.len() < M {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in (0..dict.size()).filter(|i| !support.contains(i)) {
            let mut score = 0.0;
            for (y, w) in snaps.received.iter().zip(&snaps.combiners) {
                let ryy = y * y.adjoint();
                let v = if support.is_empty() {
                    ryy.clone()
                } else {
                    let phi = w.adjoint() * dict.select(&support);
                    let p = pinv(&phi).unwrap();
                    &ryy - &phi * (&p * &ryy * p.adjoint()) * phi.adjoint()
                };
                let col = w.adjoint() * dict.atoms.column(i);
                score += col.dotc(&(v * &col)).norm();
            }
            if score > best.1 {
                best = (i, score);
            }
        }
        support.push(best.0);
    }
    support
}

#[test]
fn omni_pair_sums_to_scaled_unit_vector() {
    for n in 1..=64 {
        let (f1, f2) = omni_precoder_pair::<f64>(n).unwrap();
        let s = 1.0 / (n as f64).sqrt();
        let mut want = CVec::zeros(n);
        want[0] = Complex::new(s + s, 0.0);
        assert_eq!(f1 + f2, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_weight_prior_is_dcomp(seed in any::<u64>(), paths in 1usize..4) {
        let (snaps, dict) = snapshots(seed, paths, 6, 0.05);
        let mut rng = common::rng(seed ^ 1);
        let rho: Vec<f64> = (0..dict.size()).map(|_| rng.random::<f64>()).collect();
        let plain = lw_dcomp(&snaps, &dict, 0.05, &PriorWeights::uniform(dict.size())).unwrap();
        let zero = lw_dcomp(&snaps, &dict, 0.05, &PriorWeights::from_probabilities(rho, 0.0)).unwrap();
        prop_assert_eq!(&plain.support, &zero.support);
        prop_assert_eq!(&plain.gain_cov, &zero.gain_cov);
        prop_assert_eq!(&plain.assembled, &zero.assembled);
        prop_assert_eq!(plain.support, reference_support(&snaps, &dict));
    }

    #[test]
    fn support_bound_and_monotone_residual(seed in any::<u64>(), paths in 1usize..6, noise in 0.0f64..0.5) {
        let (snaps, dict) = snapshots(seed, paths, 5, noise);
        let mut rng = common::rng(seed ^ 2);
        let rho: Vec<f64> = (0..dict.size()).map(|_| rng.random::<f64>()).collect();
        let est = lw_dcomp(&snaps, &dict, noise, &PriorWeights::from_probabilities(rho, rng.random_range(0.0..2.0))).unwrap();
        prop_assert!(est.support.len() <= M);
        let mut prev = f64::INFINITY;
        for k in 0..=est.support.len() {
            let r = residual_sum(&snaps, &dict, &est.support[..k]);
            prop_assert!(r <= prev * (1.0 + 1e-9));
            prev = r;
        }
        prop_assert!(common::min_eig_ratio(&est.assembled) >= -1e-8);
    }

    #[test]
    fn grid_and_snapshot_invariants(seed in any::<u64>(), n in 1usize..40, over in 1usize..5) {
        let dict = build_dictionary(&UlaGeometry::<f64>::new(n, 0.5).unwrap(), over).unwrap();
        prop_assert!(dict.size() >= n);
        for c in dict.atoms.column_iter() {
            prop_assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        let (snaps, _) = snapshots(seed, 2, 3, 0.1);
        for w in &snaps.combiners {
            prop_assert!(w.iter().all(|z| (z.norm() - 1.0 / (N as f64).sqrt()).abs() < 1e-12));
        }
        let mut rng = common::rng(seed);
        let rho: Vec<f64> = (0..32).map(|i| if i % 3 == 0 { 0.0 } else if i % 3 == 1 { 1.0 } else { rng.random() }).collect();
        let w = PriorWeights::from_probabilities(rho, 1.0);
        prop_assert!(w.probabilities.iter().all(|&p| p > 0.0 && p < 1.0));
        prop_assert!(w.weights.iter().all(|v| v.is_finite()));
    }
}

/// Pure noise at the doubled two-frame variance should rarely pass the
/// stopping rule. Under the literal threshold `2 sigma^2 sum_t ||W^H W||_F`
/// the residual `sum_t ||y y^H||_F ~ 2 sigma^2 M T` exceeds it by about
/// `sqrt(M)`, so the loop selects atoms until `M`.
#[test]
#[ignore = "stopping threshold and noise-floor expectation disagree; see README"]
fn noise_floor_stopping() {
    let cb = PhaseCodebook::<f64>::new(2).unwrap();
    let dict = build_dictionary(&UlaGeometry::new(N, 0.5).unwrap(), 2).unwrap();
    let mut total = 0;
    for trial in 0..200 {
        let mut rng = common::rng(trial);
        let combiners = (0..10).map(|_| random_combiner(N, M, &cb, &mut rng)).collect();
        let snaps = collect_snapshots(|_, _: &CVec<f64>| CVec::zeros(N), combiners, N_TX, 1.0, Side::Rx, &mut rng).unwrap();
        total += lw_dcomp(&snaps, &dict, 1.0, &PriorWeights::uniform(dict.size())).unwrap().support.len();
    }
    assert!(total as f64 / 200.0 <= 1.0, "mean support {}", total as f64 / 200.0);
}
