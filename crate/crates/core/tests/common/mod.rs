#![allow(dead_code)]

use nalgebra::Complex;
use oob_covariance::channel::{gen_cluster_sets, BandParams, ClusterGenConfig, CongruenceMode};
use oob_covariance::{CMat, CVec, ClusterSet, CovarianceMatrix, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat<f64> {
    CMat::from_fn(rows, cols, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

pub fn random_vec<R: Rng>(n: usize, rng: &mut R) -> CVec<f64> {
    CVec::from_fn(n, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

pub fn random_psd<R: Rng>(n: usize, rank: usize, side: Side, rng: &mut R) -> CovarianceMatrix<f64> {
    let g = random_mat(n, rank, rng);
    CovarianceMatrix::new(&g * g.adjoint(), side).unwrap()
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat<f64> {
    let g = random_mat(n, n, rng);
    (&g + g.adjoint()) * Complex::new(0.5, 0.0)
}

pub fn band(clusters: usize, rays: usize, spread: f64, rms_delay: f64) -> BandParams {
    BandParams {
        num_clusters: clusters,
        rays_per_cluster: rays,
        aoa_spread: spread,
        aod_spread: spread,
        rms_delay,
        power_decay: 0.5,
        path_gain: 1.0,
    }
}

/// Small random congruent cluster pair with delays on the order of a few
/// nanoseconds.
pub fn cluster_sets<R: Rng>(clusters: usize, rays: usize, rng: &mut R) -> (ClusterSet<f64>, ClusterSet<f64>) {
    let cfg = ClusterGenConfig {
        mode: CongruenceMode::Congruent,
        sub6: band(clusters, rays, 0.05, 5e-9),
        mmwave: band(clusters, rays, 0.05, 5e-9),
        angle_limit: 1.0,
        mean_perturbation: 0.0,
        fixed_clusters: Vec::new(),
    };
    gen_cluster_sets(&cfg, rng).unwrap()
}

pub fn min_eig_ratio(r: &CovarianceMatrix<f64>) -> f64 {
    let v = &r.eigen().unwrap().values;
    let top = v[0].abs().max(f64::MIN_POSITIVE);
    v[v.len() - 1] / top
}
