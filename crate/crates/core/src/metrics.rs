//! Evaluation metrics and the single-path SNR-loss theory.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{FreqChannel, UlaGeometry};
use crate::covariance::{CovarianceMatrix, Side};
use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{hermitian_defect, hermitian_part, log_det_hpd, singular_values};
use crate::precoding::{design_digital, design_hybrid, HybridPrecoder, PhaseCodebook};
use crate::scalar::{count, lit, re, CMat, CVec, Real};

/// Subspace efficiency with and without clipping to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency<T: Real> {
    pub raw: T,
    pub clipped: T,
}

/// `tr(U_hat^H R U_hat) / tr(U^H R U)`, where `U` and `U_hat` hold the top
/// `n_streams` eigenvectors of `R_true` and `R_est`.
///
/// The value is the fraction of the best achievable `n_streams`-dimensional
/// captured power that the estimated subspace attains, so it is `1` when the
/// dominant subspaces coincide and is unchanged by positive rescaling of
/// either matrix.
pub fn efficiency_detail<T: Real>(
    r_true: &CovarianceMatrix<T>,
    r_est: &CovarianceMatrix<T>,
    n_streams: usize,
) -> Result<Efficiency<T>> {
    if r_true.dim() != r_est.dim() {
        return Err(mismatch("true and estimated covariances differ in size"));
    }
    if n_streams == 0 || n_streams > r_true.dim() {
        return Err(invalid(format!("{n_streams} streams on a {}-antenna array", r_true.dim())));
    }
    let u = design_digital(r_true, n_streams)?;
    let uh = design_digital(r_est, n_streams)?;
    let captured = |v: &CMat<T>| (v.adjoint() * r_true.mat() * v).trace().re;
    let den = captured(&u);
    let scale = r_true.mat().norm();
    if !(den > lit::<T>(1e-12) * scale) || den <= T::zero() {
        return Err(Error::DegenerateEstimate);
    }
    let raw = captured(&uh) / den;
    Ok(Efficiency { raw, clipped: raw.max(T::zero()).min(T::one()) })
}

/// Clipped subspace efficiency, see [`efficiency_detail`].
pub fn efficiency<T: Real>(r_true: &CovarianceMatrix<T>, r_est: &CovarianceMatrix<T>, n_streams: usize) -> Result<T> {
    Ok(efficiency_detail(r_true, r_est, n_streams)?.clipped)
}

/// Link parameters of the effective-rate evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig<T: Real> {
    pub total_power: T,
    pub noise_var: T,
    pub num_subcarriers: usize,
    pub num_streams: usize,
    pub stat_blocks: usize,
    pub train_blocks: usize,
}

impl<T: Real> RateConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_power > T::zero()) {
            return Err(invalid("total power must be positive"));
        }
        if !(self.noise_var > T::zero()) {
            return Err(invalid("noise variance must be positive"));
        }
        if self.num_subcarriers == 0 || self.num_streams == 0 {
            return Err(invalid("need at least one subcarrier and one stream"));
        }
        if self.stat_blocks == 0 || self.train_blocks > self.stat_blocks {
            return Err(invalid("need 0 <= training blocks <= statistics blocks"));
        }
        Ok(())
    }

    /// `1 - T_train / T_stat`.
    pub fn data_fraction(&self) -> T {
        T::one() - count::<T>(self.train_blocks) / count::<T>(self.stat_blocks)
    }
}

fn bb_at<T: Real>(p: &HybridPrecoder<T>, k: usize) -> Result<&CMat<T>> {
    match p.bb.len() {
        0 => Err(invalid("precoder has no baseband matrices")),
        1 => Ok(&p.bb[0]),
        _ => p.bb.get(k).ok_or_else(|| mismatch("fewer baseband matrices than subcarriers")),
    }
}

/// Effective achievable rate in bits/s/Hz:
/// `(1 - T_train/T_stat) / K sum_k log2 det(I + P/(K N_s) R_n[k]^-1 W[k]^H H[k] F[k] F[k]^H H[k]^H W[k])`
/// with `R_n[k] = sigma^2 W_BB[k]^H W_RF^H W_RF W_BB[k]`.
pub fn effective_rate<T: Real>(
    fc: &FreqChannel<T>,
    precoder: &HybridPrecoder<T>,
    combiner: &HybridPrecoder<T>,
    cfg: &RateConfig<T>,
) -> Result<T> {
    cfg.validate()?;
    let k_used = fc.num_subcarriers();
    if k_used == 0 {
        return Err(invalid("frequency channel has no subcarriers"));
    }
    let fraction = cfg.data_fraction();
    if fraction <= T::zero() {
        return Ok(T::zero());
    }
    let (nr, nt) = fc.dims();
    if precoder.rf.nrows() != nt || combiner.rf.nrows() != nr {
        return Err(mismatch("precoder/combiner sizes do not match the channel"));
    }
    let snr_scale = cfg.total_power / (count::<T>(cfg.num_subcarriers) * count::<T>(cfg.num_streams));
    let mut acc = T::zero();
    for (k, h) in fc.subcarriers.iter().enumerate() {
        let f = &precoder.rf * bb_at(precoder, k)?;
        let w_bb = bb_at(combiner, k)?;
        let w = &combiner.rf * w_bb;
        let rn = (w_bb.adjoint() * combiner.rf.adjoint() * &combiner.rf * w_bb) * re(cfg.noise_var);
        let g = w.adjoint() * h * f;
        let signal = &g * g.adjoint() * re(snr_scale);
        let ld_n = log_det_hpd(&rn).ok_or(Error::SingularNoiseCov { subcarrier: k })?;
        let ld_total =
            log_det_hpd(&hermitian_part(&(&rn + signal))).ok_or(Error::SingularNoiseCov { subcarrier: k })?;
        acc += (ld_total - ld_n).max(T::zero());
    }
    Ok(fraction * acc / (count::<T>(k_used) * T::ln_2()))
}

/// Additive covariance errors on both link ends.
#[derive(Debug, Clone)]
pub struct Perturbation<T: Real> {
    pub delta_rx: CMat<T>,
    pub delta_tx: CMat<T>,
}

impl<T: Real> Perturbation<T> {
    pub fn new(delta_rx: CMat<T>, delta_tx: CMat<T>) -> Result<Self> {
        for (name, m) in [("receive", &delta_rx), ("transmit", &delta_tx)] {
            if !m.is_square() {
                return Err(mismatch(format!("{name} perturbation is not square")));
            }
            let scale = m.norm().max(T::one());
            if hermitian_defect(m) > lit::<T>(1e-10) * scale {
                return Err(invalid(format!("{name} perturbation is not Hermitian")));
            }
        }
        Ok(Self { delta_rx: hermitian_part(&delta_rx), delta_tx: hermitian_part(&delta_tx) })
    }

    pub fn zero(n_rx: usize, n_tx: usize) -> Self {
        Self { delta_rx: CMat::zeros(n_rx, n_rx), delta_tx: CMat::zeros(n_tx, n_tx) }
    }

    /// Hermitian Gaussian perturbations: off-diagonal entries `CN(0, variance)`,
    /// diagonal entries real `N(0, variance)`.
    pub fn gaussian<R: Rng + ?Sized>(n_rx: usize, n_tx: usize, variance: T, rng: &mut R) -> Self {
        Self { delta_rx: hermitian_gaussian(n_rx, variance, rng), delta_tx: hermitian_gaussian(n_tx, variance, rng) }
    }

    /// Removes the component along the signal direction on each side,
    /// `G - (u^H G u) u u^H`, so that `Delta R u` is orthogonal to `u`.
    pub fn orthogonalized(&self, u_rx: &CVec<T>, u_tx: &CVec<T>) -> Self {
        let strip = |g: &CMat<T>, u: &CVec<T>| {
            let c = u.dotc(&(g * u));
            hermitian_part(&(g - u * u.adjoint() * c))
        };
        Self { delta_rx: strip(&self.delta_rx, u_rx), delta_tx: strip(&self.delta_tx, u_tx) }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { delta_rx: &self.delta_rx * re(c), delta_tx: &self.delta_tx * re(c) }
    }
}

fn std_complex<T: Real, R: Rng + ?Sized>(rng: &mut R, var: T) -> Complex<T> {
    let sd = (var * lit(0.5)).sqrt();
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    Complex::new(lit::<T>(a) * sd, lit::<T>(b) * sd)
}

fn hermitian_gaussian<T: Real, R: Rng + ?Sized>(n: usize, variance: T, rng: &mut R) -> CMat<T> {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        let d: f64 = StandardNormal.sample(rng);
        m[(i, i)] = re(lit::<T>(d) * variance.sqrt());
        for j in i + 1..n {
            let z = std_complex(rng, variance);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// `||u_rx_hat||^2 ||u_tx_hat||^2`.
pub fn snr_loss<T: Real>(u_rx_hat_norm_sq: T, u_tx_hat_norm_sq: T) -> T {
    u_rx_hat_norm_sq * u_tx_hat_norm_sq
}

/// `(1 + ||dR_rx u_rx||^2 / (N_rx^2 s^2)) (1 + ||dR_tx u_tx||^2 / (N_tx^2 s^2))`
/// with `s = sigma_alpha^2`.
pub fn snr_loss_approx<T: Real>(
    pert: &Perturbation<T>,
    u_rx: &CVec<T>,
    u_tx: &CVec<T>,
    sigma_alpha_sq: T,
    n_rx: usize,
    n_tx: usize,
) -> T {
    let s2 = sigma_alpha_sq * sigma_alpha_sq;
    let side = |d: &CMat<T>, u: &CVec<T>, n: usize| {
        let nn = count::<T>(n);
        T::one() + (d * u).norm_squared() / (nn * nn * s2)
    };
    side(&pert.delta_rx, u_rx, n_rx) * side(&pert.delta_tx, u_tx, n_tx)
}

/// Lower and upper bounds from the extreme singular values of each
/// perturbation.
pub fn snr_loss_bounds<T: Real>(pert: &Perturbation<T>, sigma_alpha_sq: T, n_rx: usize, n_tx: usize) -> (T, T) {
    let s2 = sigma_alpha_sq * sigma_alpha_sq;
    let factor = |sv: T, n: usize| {
        let nn = count::<T>(n);
        T::one() + sv * sv / (nn * nn * s2)
    };
    let extremes = |m: &CMat<T>| {
        let s = singular_values(m);
        (s.last().copied().unwrap_or_else(T::zero), s.first().copied().unwrap_or_else(T::zero))
    };
    let (rx_min, rx_max) = extremes(&pert.delta_rx);
    let (tx_min, tx_max) = extremes(&pert.delta_tx);
    (factor(rx_min, n_rx) * factor(tx_min, n_tx), factor(rx_max, n_rx) * factor(tx_max, n_tx))
}

/// How the precoder/combiner pair is derived from the perturbed covariances.
#[derive(Debug, Clone, PartialEq)]
pub enum SnrMode<T: Real> {
    /// First-order perturbed singular vector `u + U_n U_n^H dR u / (N sigma_alpha^2)`.
    FirstOrder,
    /// Dominant eigenvector of `R + dR`.
    Digital,
    /// Hybrid design on `R + dR` against a hybrid design on `R`.
    Hybrid { rf_rx: usize, rf_tx: usize, codebook: PhaseCodebook<T> },
}

/// Single-path channel `H = sqrt(N_rx N_tx) alpha a_rx(aoa) a_tx(aod)^H`
/// with `E|alpha|^2 = sigma_alpha^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePathLink<T: Real> {
    pub rx: UlaGeometry<T>,
    pub tx: UlaGeometry<T>,
    pub aoa: T,
    pub aod: T,
    pub sigma_alpha_sq: T,
}

impl<T: Real> SinglePathLink<T> {
    pub fn steering(&self) -> (CVec<T>, CVec<T>) {
        (self.rx.array_response(self.aoa), self.tx.array_response(self.aod))
    }

    /// `N sigma_alpha^2 a a^H` on each side.
    pub fn covariances(&self) -> Result<(CovarianceMatrix<T>, CovarianceMatrix<T>)> {
        let (a_r, a_t) = self.steering();
        let nr = count::<T>(self.rx.num_antennas) * self.sigma_alpha_sq;
        let nt = count::<T>(self.tx.num_antennas) * self.sigma_alpha_sq;
        Ok((
            CovarianceMatrix::new(&a_r * a_r.adjoint() * re(nr), Side::Rx)?,
            CovarianceMatrix::new(&a_t * a_t.adjoint() * re(nt), Side::Tx)?,
        ))
    }
}

/// Combiner and precoder with and without the perturbation.
#[derive(Debug, Clone)]
pub struct BeamPair<T: Real> {
    /// Unnormalized perturbed combiner and precoder.
    pub w_hat: CVec<T>,
    pub f_hat: CVec<T>,
    /// Baseline combiner and precoder (unit norm).
    pub w: CVec<T>,
    pub f: CVec<T>,
}

fn first_order<T: Real>(r: &CovarianceMatrix<T>, delta: &CMat<T>, n: usize, sigma_alpha_sq: T) -> Result<CVec<T>> {
    let eig = r.eigen()?;
    let u: CVec<T> = eig.vectors.column(0).into_owned();
    let un = eig.trailing(1);
    let du = &un * (un.adjoint() * (delta * &u)) * re(T::one() / (count::<T>(n) * sigma_alpha_sq));
    Ok(u + du)
}

fn top_vector<T: Real>(r: &CovarianceMatrix<T>) -> Result<CVec<T>> {
    Ok(r.eigen()?.vectors.column(0).into_owned())
}

fn hybrid_vector<T: Real>(r: &CovarianceMatrix<T>, rf: usize, codebook: &PhaseCodebook<T>) -> Result<CVec<T>> {
    let h = design_hybrid(r, rf, 1, codebook, 1)?;
    Ok(h.effective(0).column(0).into_owned())
}

/// Builds the beam pair of `mode` for one perturbation.
pub fn beam_pair<T: Real>(link: &SinglePathLink<T>, pert: &Perturbation<T>, mode: &SnrMode<T>) -> Result<BeamPair<T>> {
    let (nr, nt) = (link.rx.num_antennas, link.tx.num_antennas);
    if pert.delta_rx.nrows() != nr || pert.delta_tx.nrows() != nt {
        return Err(mismatch("perturbation sizes do not match the link"));
    }
    let (r_rx, r_tx) = link.covariances()?;
    let hat_rx = CovarianceMatrix::new(r_rx.mat() + &pert.delta_rx, Side::Rx)?;
    let hat_tx = CovarianceMatrix::new(r_tx.mat() + &pert.delta_tx, Side::Tx)?;
    Ok(match mode {
        SnrMode::FirstOrder => BeamPair {
            w_hat: first_order(&r_rx, &pert.delta_rx, nr, link.sigma_alpha_sq)?,
            f_hat: first_order(&r_tx, &pert.delta_tx, nt, link.sigma_alpha_sq)?,
            w: top_vector(&r_rx)?,
            f: top_vector(&r_tx)?,
        },
        SnrMode::Digital => BeamPair { w_hat: top_vector(&hat_rx)?, f_hat: top_vector(&hat_tx)?, w: top_vector(&r_rx)?, f: top_vector(&r_tx)? },
        SnrMode::Hybrid { rf_rx, rf_tx, codebook } => BeamPair {
            w_hat: hybrid_vector(&hat_rx, *rf_rx, codebook)?,
            f_hat: hybrid_vector(&hat_tx, *rf_tx, codebook)?,
            w: hybrid_vector(&r_rx, *rf_rx, codebook)?,
            f: hybrid_vector(&r_tx, *rf_tx, codebook)?,
        },
    })
}

fn unit<T: Real>(v: &CVec<T>) -> CVec<T> {
    let n = v.norm();
    if n > T::zero() {
        v * re(T::one() / n)
    } else {
        v.clone()
    }
}

/// Expected SNR ratio `SNR(w, f) / SNR(w_hat, f_hat)` after normalizing both
/// pairs, averaged over gains and noise in closed form.
pub fn expected_snr_loss<T: Real>(link: &SinglePathLink<T>, beams: &BeamPair<T>) -> Result<T> {
    let (a_r, a_t) = link.steering();
    let gain = |w: &CVec<T>, f: &CVec<T>| unit(w).dotc(&a_r).norm_sqr() * a_t.dotc(&unit(f)).norm_sqr();
    let perturbed = gain(&beams.w_hat, &beams.f_hat);
    if perturbed <= T::zero() {
        return Err(Error::Numerical("perturbed beams are orthogonal to the channel".into()));
    }
    Ok(gain(&beams.w, &beams.f) / perturbed)
}

/// Monte-Carlo SNR estimate of one perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate<T: Real> {
    pub snr_baseline: T,
    pub snr_perturbed: T,
    /// `snr_baseline / snr_perturbed`.
    pub gamma: T,
}

/// Simulates `trials` received symbols through the single-path link with
/// normalized perturbed and baseline beams (common random numbers), then
/// reports the ratio of average signal power to average noise power.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_snr<T: Real, R: Rng + ?Sized>(
    link: &SinglePathLink<T>,
    pert: &Perturbation<T>,
    mode: &SnrMode<T>,
    symbol_power: T,
    noise_var: T,
    trials: usize,
    rng: &mut R,
) -> Result<SnrEstimate<T>> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let beams = beam_pair(link, pert, mode)?;
    let (a_r, a_t) = link.steering();
    let (nr, nt) = (link.rx.num_antennas, link.tx.num_antennas);
    let scale = count::<T>(nr * nt).sqrt();
    let (w_hat, f_hat) = (unit(&beams.w_hat), unit(&beams.f_hat));
    let (w, f) = (unit(&beams.w), unit(&beams.f));
    let path_hat = w_hat.dotc(&a_r) * a_t.dotc(&f_hat) * re(scale);
    let path = w.dotc(&a_r) * a_t.dotc(&f) * re(scale);

    let (mut sig_hat, mut sig, mut noise_hat, mut noise) = (T::zero(), T::zero(), T::zero(), T::zero());
    for _ in 0..trials {
        let alpha = std_complex(rng, link.sigma_alpha_sq);
        let s = std_complex(rng, symbol_power);
        let n = CVec::from_fn(nr, |_, _| std_complex(rng, noise_var));
        sig_hat += (path_hat * alpha * s).norm_sqr();
        sig += (path * alpha * s).norm_sqr();
        noise_hat += w_hat.dotc(&n).norm_sqr();
        noise += w.dotc(&n).norm_sqr();
    }
    if !(noise_hat > T::zero() && noise > T::zero() && sig_hat > T::zero()) {
        return Err(Error::Numerical("degenerate Monte-Carlo SNR estimate".into()));
    }
    let snr_perturbed = sig_hat / noise_hat;
    let snr_baseline = sig / noise;
    Ok(SnrEstimate { snr_baseline, snr_perturbed, gamma: snr_baseline / snr_perturbed })
}
