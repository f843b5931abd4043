mod common;

use oob_covariance::channel::{build_delay_taps, delay_to_freq, raised_cosine};
use oob_covariance::covariance::{rx_covariance, subspace_decompose, synthesize_multicluster, theoretical_covariance, tx_covariance};
use oob_covariance::linalg::{hermitian_defect, max_principal_sine, orthonormality_defect};
use oob_covariance::{CovarianceMatrix, PasKind, Side, UlaGeometry};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn closed_form_psd_in_small_spread_regime() {
    for &n in &[4usize, 8, 32, 64] {
        let g = UlaGeometry::new(n, 0.5).unwrap();
        for pas in [PasKind::TruncatedGaussian, PasKind::TruncatedLaplacian, PasKind::Uniform] {
            for mean in (-60..=60).step_by(15) {
                for spread in [0.0f64, 1.0, 3.0, 5.0, 10.0] {
                    let r = theoretical_covariance(pas, (mean as f64).to_radians(), spread.to_radians(), &g).unwrap();
                    assert!(common::min_eig_ratio(&r) >= -1e-8, "{pas:?} n={n} mean={mean} spread={spread}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_covariances_are_psd(seed in any::<u64>(), clusters in 1usize..4) {
        let mut rng = common::rng(seed);
        let (set, _) = common::cluster_sets(clusters, 5, &mut rng);
        let ts = 1.0 / 150e6;
        let ch = build_delay_taps(&set, &UlaGeometry::new(8, 0.5).unwrap(), &UlaGeometry::new(4, 0.5).unwrap(), 4, ts, |t| raised_cosine(t, 1.0, ts)).unwrap();
        let fc = delay_to_freq(&ch, 8).unwrap();
        for r in [rx_covariance(&fc).unwrap(), tx_covariance(&fc).unwrap()] {
            prop_assert!(hermitian_defect(r.mat()) < 1e-10);
            prop_assert!(common::min_eig_ratio(&r) >= -1e-8);
        }
    }

    #[test]
    fn construction_symmetrizes(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = common::rng(seed);
        let r = CovarianceMatrix::new(common::random_mat(n, n, &mut rng), Side::Rx).unwrap();
        prop_assert!(hermitian_defect(r.mat()) < 1e-10);
    }

    #[test]
    fn noise_does_not_rotate_signal_subspace(seed in any::<u64>(), n in 4usize..16, noise in 0.01f64..10.0) {
        let mut rng = common::rng(seed);
        let g = UlaGeometry::new(n, 0.5).unwrap();
        let a = theoretical_covariance(PasKind::TruncatedGaussian, 0.2, 0.05, &g).unwrap();
        let b = theoretical_covariance(PasKind::TruncatedGaussian, -0.6, 0.03, &g).unwrap();
        let p: f64 = rng.random_range(0.2..0.8);
        let clean = synthesize_multicluster(&[(p, &a), (1.0 - p, &b)], None).unwrap();
        let noisy = synthesize_multicluster(&[(p, &a), (1.0 - p, &b)], Some(noise)).unwrap();
        let s1 = subspace_decompose(&clean, 2).unwrap();
        let s2 = subspace_decompose(&noisy, 2).unwrap();
        prop_assert!(max_principal_sine(&s1.signal_basis, &s2.signal_basis) < 1e-8);
        let mut full = s2.signal_basis.clone().resize_horizontally(n, Default::default());
        full.columns_mut(2, n - 2).copy_from(&s2.noise_basis);
        prop_assert!(orthonormality_defect(&full) < 1e-8);
        prop_assert!(s2.signal_values.windows(2).all(|w| w[0] >= w[1]) && s2.signal_values.iter().all(|&v| v >= 0.0));
    }
}
