mod common;

use oob_covariance::precoding::{design_digital, design_hybrid, hybrid_residual, omp_select, quantized_steering_candidates};
use oob_covariance::linalg::max_principal_sine;
use oob_covariance::{PhaseCodebook, Side};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rf_entries_lie_on_codebook(seed in any::<u64>(), n in 2usize..24, bits in 1u32..4, k in 1usize..5) {
        let mut rng = common::rng(seed);
        let cb = PhaseCodebook::<f64>::new(bits).unwrap();
        let r = common::random_psd(n, n, Side::Tx, &mut rng);
        let streams = 1 + (seed as usize) % n.min(3);
        let rf = streams + (seed as usize / 7) % (n - streams + 1);
        let h = design_hybrid(&r, rf, streams, &cb, k).unwrap();
        let scale = 1.0 / (n as f64).sqrt();
        for ((i, j), z) in h.rf.iter().enumerate().map(|(idx, z)| ((idx % n, idx / n), z)) {
            prop_assert_eq!(*z, cb.unit(h.rf_levels[(i, j)]) * scale);
        }
        prop_assert!((h.total_power() - (k * streams) as f64).abs() < 1e-8);
    }

    #[test]
    fn digital_ignores_identity_shift(seed in any::<u64>(), n in 2usize..16, c in 0.0f64..50.0) {
        let mut rng = common::rng(seed);
        let r = common::random_psd(n, 2, Side::Rx, &mut rng);
        let a = design_digital(&r, 2).unwrap();
        let b = design_digital(&r.plus_identity(c), 2).unwrap();
        prop_assert!(max_principal_sine(&a, &b) < 1e-8);
    }

    #[test]
    fn hybrid_residual_nonincreasing_in_rf_chains(seed in any::<u64>(), n in 4usize..20) {
        let mut rng = common::rng(seed);
        let cb = PhaseCodebook::<f64>::new(2).unwrap();
        let r = common::random_psd(n, n, Side::Rx, &mut rng);
        let u = design_digital(&r, 2).unwrap();
        let (cand, _) = quantized_steering_candidates(n, 2, &cb);
        let mut prev = f64::INFINITY;
        for m in 2..=n {
            let (chosen, _) = omp_select(&u, &cand, m).unwrap();
            let e = hybrid_residual(&u, &cand.select_columns(&chosen)).unwrap();
            prop_assert!(e <= prev + 1e-10);
            prev = e;
        }
    }
}
