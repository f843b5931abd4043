//! Spatial covariance matrices: Gram estimates from channel realizations,
//! closed-form power-azimuth-spectrum models and signal/noise subspaces.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channel::{FreqChannel, UlaGeometry};
use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, HermitianEigen};
use crate::scalar::{cis, count, lit, re, CMat, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Rx,
    Tx,
}

/// Power azimuth spectrum of a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasKind {
    TruncatedLaplacian,
    TruncatedGaussian,
    Uniform,
}

/// Hermitian covariance matrix with a lazily computed eigen-decomposition.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix<T: Real> {
    mat: CMat<T>,
    pub side: Side,
    eigen: OnceLock<HermitianEigen<T>>,
}

impl<T: Real> PartialEq for CovarianceMatrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.side == other.side && self.mat == other.mat
    }
}

impl<T: Real> CovarianceMatrix<T> {
    /// Wraps a square matrix, replacing it by its Hermitian part.
    pub fn new(mat: CMat<T>, side: Side) -> Result<Self> {
        if !mat.is_square() {
            return Err(mismatch(format!("covariance must be square, got {:?}", mat.shape())));
        }
        Ok(Self { mat: hermitian_part(&mat), side, eigen: OnceLock::new() })
    }

    pub fn zeros(n: usize, side: Side) -> Self {
        Self { mat: CMat::zeros(n, n), side, eigen: OnceLock::new() }
    }

    pub fn identity(n: usize, side: Side) -> Self {
        Self { mat: CMat::identity(n, n), side, eigen: OnceLock::new() }
    }

    pub fn mat(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMat<T> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> T {
        self.mat.diagonal().iter().fold(T::zero(), |a, z| a + z.re)
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    /// Eigen-decomposition, eigenvalues descending.
    pub fn eigen(&self) -> Result<&HermitianEigen<T>> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = hermitian_eigen(&self.mat)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { mat: &self.mat * re(c), side: self.side, eigen: OnceLock::new() }
    }

    /// `R + c I`.
    pub fn plus_identity(&self, c: T) -> Self {
        let n = self.dim();
        Self { mat: &self.mat + CMat::identity(n, n) * re(c), side: self.side, eigen: OnceLock::new() }
    }
}

fn average_gram<T: Real>(fc: &FreqChannel<T>, adjoint_first: bool) -> Result<CMat<T>> {
    let k = fc.num_subcarriers();
    if k == 0 {
        return Err(invalid("frequency channel has no subcarriers"));
    }
    let (nr, nt) = fc.dims();
    let (n, other) = if adjoint_first { (nt, nr) } else { (nr, nt) };
    let mut acc = CMat::zeros(n, n);
    for h in &fc.subcarriers {
        if h.shape() != (nr, nt) {
            return Err(mismatch("subcarrier matrices differ in shape"));
        }
        if adjoint_first {
            acc += h.adjoint() * h;
        } else {
            acc += h * h.adjoint();
        }
    }
    Ok(acc * re(T::one() / (count::<T>(k) * count::<T>(other.max(1)))))
}

/// `(1/K) sum_k (1/N_tx) H[k] H[k]^H`.
pub fn rx_covariance<T: Real>(fc: &FreqChannel<T>) -> Result<CovarianceMatrix<T>> {
    CovarianceMatrix::new(average_gram(fc, false)?, Side::Rx)
}

/// `(1/K) sum_k (1/N_rx) H[k]^H H[k]`.
pub fn tx_covariance<T: Real>(fc: &FreqChannel<T>) -> Result<CovarianceMatrix<T>> {
    CovarianceMatrix::new(average_gram(fc, true)?, Side::Tx)
}

/// Single-cluster covariance under the small angle-spread approximation.
///
/// Entry `(i, j)` is an envelope in `x = 2 pi spacing (i - j) cos(mean)`
/// times the steering phase `exp(j 2 pi spacing (i - j) sin(mean))`:
///
/// | PAS | envelope |
/// |---|---|
/// | truncated Laplacian | `b / (1 + spread^2 x^2 / 2)`, `b = 1 / (1 - exp(-sqrt(2) pi / spread))` |
/// | truncated Gaussian | `exp(-(x spread)^2)` |
/// | uniform | `sin(sqrt(3) x spread) / (sqrt(3) x spread)` |
///
/// The Laplacian normalization `b` scales the whole matrix, diagonal included.
pub fn theoretical_covariance<T: Real>(
    pas: PasKind,
    mean_angle: T,
    spread: T,
    geom: &UlaGeometry<T>,
) -> Result<CovarianceMatrix<T>> {
    if !(spread >= T::zero()) {
        return Err(invalid("angle spread must be non-negative"));
    }
    let n = geom.num_antennas;
    let w_sin = T::two_pi() * geom.spacing * mean_angle.sin();
    let w_cos = T::two_pi() * geom.spacing * mean_angle.cos();
    let laplace_norm = if spread > T::zero() {
        let tail = (-(lit::<T>(2.0).sqrt() * T::pi()) / spread).exp();
        T::one() / (T::one() - tail)
    } else {
        T::one()
    };
    let sqrt3 = lit::<T>(3.0).sqrt();
    let envelope = |d: T| -> T {
        let x = d * w_cos;
        match pas {
            PasKind::TruncatedLaplacian => laplace_norm / (T::one() + spread * spread * lit::<T>(0.5) * x * x),
            PasKind::TruncatedGaussian => {
                let e = x * spread;
                (-(e * e)).exp()
            }
            PasKind::Uniform => {
                let u = sqrt3 * x * spread;
                if u.abs() < lit(1e-12) {
                    T::one()
                } else {
                    u.sin() / u
                }
            }
        }
    };
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = count::<T>(i) - count::<T>(j);
            m[(i, j)] = cis(d * w_sin) * envelope(d);
        }
    }
    CovarianceMatrix::new(m, Side::Rx)
}

/// `sum_c power_c R_c (+ noise_var I)`.
pub fn synthesize_multicluster<T: Real>(
    components: &[(T, &CovarianceMatrix<T>)],
    noise_var: Option<T>,
) -> Result<CovarianceMatrix<T>> {
    let Some((_, first)) = components.first() else {
        return Err(invalid("no covariance components"));
    };
    let n = first.dim();
    let side = first.side;
    let mut acc = CMat::zeros(n, n);
    for (p, c) in components {
        if c.dim() != n {
            return Err(mismatch(format!("component of size {} in a sum of size {n}", c.dim())));
        }
        if c.side != side {
            return Err(mismatch("components mix receive and transmit sides"));
        }
        if !(*p >= T::zero()) {
            return Err(invalid("cluster power must be non-negative"));
        }
        acc += c.mat() * re(*p);
    }
    if let Some(s) = noise_var {
        for i in 0..n {
            acc[(i, i)] += re(s);
        }
    }
    CovarianceMatrix::new(acc, side)
}

/// Split of an eigenbasis into its `m` dominant directions and the rest.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition<T: Real> {
    pub signal_basis: CMat<T>,
    pub signal_values: Vec<T>,
    pub noise_basis: CMat<T>,
}

pub fn subspace_decompose<T: Real>(r: &CovarianceMatrix<T>, signal_dim: usize) -> Result<SubspaceDecomposition<T>> {
    let n = r.dim();
    if signal_dim == 0 || signal_dim > n {
        return Err(invalid(format!("signal dimension {signal_dim} outside 1..={n}")));
    }
    let eig = r.eigen()?;
    Ok(SubspaceDecomposition {
        signal_basis: eig.leading(signal_dim),
        signal_values: eig.values[..signal_dim].iter().map(|&v| if v < T::zero() { T::zero() } else { v }).collect(),
        noise_basis: eig.trailing(signal_dim),
    })
}

/// Rejects matrices whose smallest eigenvalue falls below `-tol * lambda_max`.
pub fn check_psd<T: Real>(r: &CovarianceMatrix<T>, tol: T) -> Result<()> {
    let eig = r.eigen()?;
    let top = eig.values.first().copied().unwrap_or_else(T::zero);
    let bottom = eig.values.last().copied().unwrap_or_else(T::zero);
    if bottom < -tol * top.abs() {
        return Err(Error::Numerical(format!("matrix is not positive semidefinite (min eigenvalue {bottom:?})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use crate::linalg::{max_principal_sine, orthonormality_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(nr: usize, nt: usize, k: usize, seed: u64) -> FreqChannel<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FreqChannel {
            subcarriers: (0..k)
                .map(|_| CMat::from_fn(nr, nt, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
                .collect(),
        }
    }

    fn random_psd(n: usize, seed: u64) -> CovarianceMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        CovarianceMatrix::new(&g * g.adjoint(), Side::Rx).unwrap()
    }

    #[test]
    fn rx_covariance_single_path() {
        let (nr, nt) = (4, 3);
        let rx = UlaGeometry::<f64>::new(nr, 0.5).unwrap();
        let tx = UlaGeometry::<f64>::new(nt, 0.5).unwrap();
        let alpha = Complex::new(0.6, -0.8);
        let h = rx.array_response(0.3) * tx.array_response(-0.2).adjoint() * (alpha * ((nr * nt) as f64).sqrt());
        let fc = FreqChannel { subcarriers: vec![h.clone(), h] };
        let r = rx_covariance(&fc).unwrap();
        let a = rx.array_response(0.3);
        let expected = &a * a.adjoint() * re(nr as f64 * alpha.norm_sqr());
        assert!((r.mat() - expected).norm() < 1e-12);
        let t = tx_covariance(&fc).unwrap();
        let b = tx.array_response(-0.2);
        let expected = &b * b.adjoint() * re(nt as f64 * alpha.norm_sqr());
        assert!((t.mat() - expected).norm() < 1e-12);
        assert_eq!(t.side, Side::Tx);
    }

    #[test]
    fn gram_covariances_match_direct_sum() {
        let (nr, nt, k) = (3, 2, 2);
        let fc = random_channel(nr, nt, k, 7);
        let r = rx_covariance(&fc).unwrap();
        let t = tx_covariance(&fc).unwrap();
        for i in 0..nr {
            for j in 0..nr {
                let mut s = Complex::new(0.0, 0.0);
                for h in &fc.subcarriers {
                    for c in 0..nt {
                        s += h[(i, c)] * h[(j, c)].conj();
                    }
                }
                s /= (k * nt) as f64;
                assert!((r.mat()[(i, j)] - s).norm() < 1e-12);
            }
        }
        for i in 0..nt {
            for j in 0..nt {
                let mut s = Complex::new(0.0, 0.0);
                for h in &fc.subcarriers {
                    for c in 0..nr {
                        s += h[(c, i)].conj() * h[(c, j)];
                    }
                }
                s /= (k * nr) as f64;
                assert!((t.mat()[(i, j)] - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_channel_zero_covariance() {
        let fc = FreqChannel { subcarriers: vec![CMat::<f64>::zeros(3, 2); 4] };
        assert_eq!(rx_covariance(&fc).unwrap().mat().norm(), 0.0);
        assert_eq!(tx_covariance(&fc).unwrap().mat().norm(), 0.0);
        assert!(rx_covariance(&FreqChannel::<f64> { subcarriers: vec![] }).is_err());
    }

    #[test]
    fn zero_spread_is_steering_outer_product() {
        let g = UlaGeometry::<f64>::new(6, 0.5).unwrap();
        let theta = 0.4;
        for pas in [PasKind::TruncatedLaplacian, PasKind::TruncatedGaussian, PasKind::Uniform] {
            let r = theoretical_covariance(pas, theta, 0.0, &g).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    let want: Complex<f64> = cis(std::f64::consts::PI * (i as f64 - j as f64) * theta.sin());
                    assert!((r.mat()[(i, j)] - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_envelope_value() {
        let g = UlaGeometry::<f64>::new(4, 0.5).unwrap();
        let r = theoretical_covariance(PasKind::TruncatedGaussian, 0.0, 0.05, &g).unwrap();
        let want = (-(std::f64::consts::PI * 0.05).powi(2)).exp();
        assert!((want - 0.97562).abs() < 1e-5);
        assert!((r.mat()[(1, 0)] - Complex::new(want, 0.0)).norm() < 1e-14);
        assert!((r.mat()[(0, 0)] - Complex::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn laplacian_envelope_decreases() {
        let g = UlaGeometry::<f64>::new(8, 0.5).unwrap();
        let s = 0.2;
        let r = theoretical_covariance(PasKind::TruncatedLaplacian, 0.0, s, &g).unwrap();
        let beta = 1.0 / (1.0 - (-(2f64.sqrt()) * std::f64::consts::PI / s).exp());
        let mut prev = f64::INFINITY;
        for d in 0..8 {
            let x = std::f64::consts::PI * d as f64;
            let oracle = beta / (1.0 + s * s / 2.0 * x * x);
            let v = r.mat()[(d, 0)].norm();
            assert!((v - oracle).abs() < 1e-12);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn uniform_envelope_value() {
        let g = UlaGeometry::<f64>::new(4, 0.5).unwrap();
        let (theta, s) = (0.3f64, 0.04f64);
        let r = theoretical_covariance(PasKind::Uniform, theta, s, &g).unwrap();
        let rho = 3f64.sqrt() * std::f64::consts::PI * s * theta.cos();
        let want = cis(std::f64::consts::PI * 2.0 * theta.sin()) * ((2.0 * rho).sin() / (2.0 * rho));
        assert!((r.mat()[(2, 0)] - want).norm() < 1e-13);
    }

    #[test]
    fn negative_spread_rejected() {
        let g = UlaGeometry::<f64>::new(4, 0.5).unwrap();
        assert!(theoretical_covariance(PasKind::Uniform, 0.0, -0.1, &g).is_err());
    }

    #[test]
    fn synthesize_sums() {
        let a = random_psd(4, 1);
        let b = random_psd(4, 2);
        let c = random_psd(4, 3);
        let one = synthesize_multicluster(&[(1.0, &a)], None).unwrap();
        assert_eq!(one.mat(), a.mat());
        let avg = synthesize_multicluster(&[(0.5, &a), (0.5, &b)], None).unwrap();
        assert!((avg.mat() - (a.mat() + b.mat()) * re(0.5)).norm() < 1e-14);
        let (e1, e2, e3, s) = (0.2, 1.3, 0.05, 0.3);
        let sum = synthesize_multicluster(&[(e1, &a), (e2, &b), (e3, &c)], Some(s)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut want = a.mat()[(i, j)] * e1 + b.mat()[(i, j)] * e2 + c.mat()[(i, j)] * e3;
                if i == j {
                    want += s;
                }
                assert!((sum.mat()[(i, j)] - want).norm() < 1e-12);
            }
        }
        let small = random_psd(3, 4);
        assert!(synthesize_multicluster(&[(1.0, &a), (1.0, &small)], None).is_err());
    }

    #[test]
    fn decomposition_rank_one() {
        let g = UlaGeometry::<f64>::new(8, 0.5).unwrap();
        let a = g.array_response(0.25);
        let r = CovarianceMatrix::new(&a * a.adjoint(), Side::Rx).unwrap();
        let d = subspace_decompose(&r, 1).unwrap();
        let overlap = (a.adjoint() * &d.signal_basis)[(0, 0)].norm();
        assert!((overlap - 1.0).abs() < 1e-10);
        assert_eq!(d.noise_basis.ncols(), 7);
    }

    #[test]
    fn decomposition_identity() {
        let r = CovarianceMatrix::<f64>::identity(4, Side::Rx);
        let d = subspace_decompose(&r, 2).unwrap();
        assert!((d.signal_values[0] - 1.0).abs() < 1e-12 && (d.signal_values[1] - 1.0).abs() < 1e-12);
        assert!(orthonormality_defect(&d.signal_basis) < 1e-10);
        assert!(subspace_decompose(&r, 0).is_err());
        assert!(subspace_decompose(&r, 5).is_err());
    }

    #[test]
    fn decomposition_residual_and_shift_invariance() {
        let r = random_psd(6, 11);
        let d = subspace_decompose(&r, 3).unwrap();
        let eig = r.eigen().unwrap();
        for i in 0..6 {
            let u = eig.vectors.column(i);
            let resid = r.mat() * u - u * re(eig.values[i]);
            assert!(resid.norm() < 1e-8);
        }
        let full = CMat::from_columns(
            &d.signal_basis.column_iter().chain(d.noise_basis.column_iter()).collect::<Vec<_>>(),
        );
        assert!(orthonormality_defect(&full) < 1e-8);
        let shifted = subspace_decompose(&r.plus_identity(2.5), 3).unwrap();
        assert!(max_principal_sine(&d.signal_basis, &shifted.signal_basis) < 1e-8);
    }
}
