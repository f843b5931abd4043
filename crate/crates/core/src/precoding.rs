//! Statistical precoders and combiners from covariance estimates.

use nalgebra::Complex;

use crate::covariance::CovarianceMatrix;
use crate::error::{invalid, Result};
use crate::linalg::pinv;
use crate::scalar::{cis, count, re, CMat, Real};

/// Uniform phase-shifter alphabet with `2^bits` levels on `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook<T: Real> {
    pub bits: u32,
    pub phases: Vec<T>,
}

impl<T: Real> PhaseCodebook<T> {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(invalid(format!("phase resolution of {bits} bits is not supported")));
        }
        let levels = 1usize << bits;
        let phases = (0..levels).map(|q| T::two_pi() * count::<T>(q) / count::<T>(levels)).collect();
        Ok(Self { bits, phases })
    }

    pub fn levels(&self) -> usize {
        self.phases.len()
    }

    /// Unit-modulus value of level `q`.
    pub fn unit(&self, q: usize) -> Complex<T> {
        cis(self.phases[q])
    }

    /// Level nearest to the phase of `z`.
    pub fn nearest(&self, z: Complex<T>) -> usize {
        let levels = count::<T>(self.levels());
        let mut ang = z.im.atan2(z.re);
        if ang < T::zero() {
            ang += T::two_pi();
        }
        let q = (ang * levels / T::two_pi()).round();
        let q = q.to_usize().unwrap_or(0);
        q % self.levels()
    }
}

/// Phase-shifter RF matrix plus per-subcarrier baseband matrices.
#[derive(Debug, Clone)]
pub struct HybridPrecoder<T: Real> {
    pub rf: CMat<T>,
    /// Codebook level of every RF entry, same shape as `rf`.
    pub rf_levels: nalgebra::DMatrix<usize>,
    pub bb: Vec<CMat<T>>,
}

impl<T: Real> HybridPrecoder<T> {
    /// `F_RF F_BB[k]`.
    pub fn effective(&self, k: usize) -> CMat<T> {
        &self.rf * &self.bb[k]
    }

    pub fn total_power(&self) -> T {
        (0..self.bb.len()).fold(T::zero(), |a, k| a + self.effective(k).norm_squared())
    }

    /// Fully digital precoder wrapped as a hybrid one with an identity RF
    /// stage. `rf_levels` is empty.
    pub fn digital(f: CMat<T>, num_subcarriers: usize) -> Self {
        let n = f.nrows();
        Self { rf: CMat::identity(n, n), rf_levels: nalgebra::DMatrix::zeros(0, 0), bb: vec![f; num_subcarriers] }
    }
}

/// Top `n_streams` eigenvectors of `R`.
pub fn design_digital<T: Real>(r: &CovarianceMatrix<T>, n_streams: usize) -> Result<CMat<T>> {
    if n_streams == 0 || n_streams > r.dim() {
        return Err(invalid(format!("{n_streams} streams on a {}-antenna array", r.dim())));
    }
    Ok(r.eigen()?.leading(n_streams))
}

/// Quantized steering candidates for the RF stage: spatial frequencies
/// uniform on `[-pi, pi)` with `oversampling * N` points, each entry snapped
/// to the codebook. Returns the candidate matrix (unit-norm columns) and the
/// level indices.
pub fn quantized_steering_candidates<T: Real>(
    n: usize,
    oversampling: usize,
    codebook: &PhaseCodebook<T>,
) -> (CMat<T>, nalgebra::DMatrix<usize>) {
    let b = oversampling.max(1) * n;
    let levels = nalgebra::DMatrix::from_fn(n, b, |i, j| {
        let w = -T::pi() + T::two_pi() * count::<T>(j) / count::<T>(b);
        codebook.nearest(cis(w * count::<T>(i)))
    });
    let scale = T::one() / count::<T>(n).sqrt();
    let cand = CMat::from_fn(n, b, |i, j| codebook.unit(levels[(i, j)]) * scale);
    (cand, levels)
}

/// `||U - F (F^+ U)||_F`: the best baseband approximation error of `U` with
/// the RF matrix `F`.
pub fn hybrid_residual<T: Real>(u: &CMat<T>, rf: &CMat<T>) -> Result<T> {
    let bb = pinv(rf)? * u;
    Ok((u - rf * bb).norm())
}

const CANDIDATE_OVERSAMPLING: usize = 2;

/// Greedy OMP factorization of the dominant eigenvectors over quantized
/// steering columns, with a frequency-flat baseband normalized so that
/// `sum_k ||F_RF F_BB[k]||_F^2 = K N_s`.
pub fn design_hybrid<T: Real>(
    r: &CovarianceMatrix<T>,
    n_rf: usize,
    n_streams: usize,
    codebook: &PhaseCodebook<T>,
    num_subcarriers: usize,
) -> Result<HybridPrecoder<T>> {
    let n = r.dim();
    if n_streams == 0 || n_streams > n_rf || n_rf > n {
        return Err(invalid(format!("need 1 <= streams ({n_streams}) <= RF chains ({n_rf}) <= antennas ({n})")));
    }
    if num_subcarriers == 0 {
        return Err(invalid("need at least one subcarrier"));
    }
    let u = design_digital(r, n_streams)?;
    let (cand, cand_levels) = quantized_steering_candidates(n, CANDIDATE_OVERSAMPLING, codebook);
    let (chosen, bb) = omp_select(&u, &cand, n_rf)?;

    let rf = cand.select_columns(&chosen);
    let rf_levels = nalgebra::DMatrix::from_fn(n, chosen.len(), |i, j| cand_levels[(i, chosen[j])]);
    let f = &rf * &bb;
    let norm = f.norm();
    let bb = if norm > T::zero() { bb * re(count::<T>(n_streams).sqrt() / norm) } else { bb };
    Ok(HybridPrecoder { rf, rf_levels, bb: vec![bb; num_subcarriers] })
}

/// Picks `count` columns of `cand` greedily against the residual of `u`.
/// Returns the chosen indices and the least-squares baseband.
pub fn omp_select<T: Real>(u: &CMat<T>, cand: &CMat<T>, count_cols: usize) -> Result<(Vec<usize>, CMat<T>)> {
    let mut chosen: Vec<usize> = Vec::with_capacity(count_cols);
    let mut resid = u.clone();
    let mut bb = CMat::zeros(0, u.ncols());
    for _ in 0..count_cols {
        let corr = cand.adjoint() * &resid;
        let mut best: Option<(usize, T)> = None;
        for j in 0..cand.ncols() {
            if chosen.contains(&j) {
                continue;
            }
            let e = corr.row(j).norm_squared();
            if best.is_none_or(|(_, v)| e > v) {
                best = Some((j, e));
            }
        }
        let Some((j, _)) = best else { break };
        chosen.push(j);
        let rf = cand.select_columns(&chosen);
        bb = pinv(&rf)? * u;
        resid = u - &rf * &bb;
        let rn = resid.norm();
        if rn > T::zero() {
            resid *= re(T::one() / rn);
        }
    }
    Ok((chosen, bb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::UlaGeometry;
    use crate::covariance::Side;
    use crate::linalg::{max_principal_sine, orthonormality_defect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, seed: u64) -> CovarianceMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        CovarianceMatrix::new(&g * g.adjoint(), Side::Tx).unwrap()
    }

    #[test]
    fn codebook_levels() {
        let cb = PhaseCodebook::<f64>::new(2).unwrap();
        assert_eq!(cb.phases.len(), 4);
        assert!(cb.phases.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(cb.nearest(Complex::new(0.0, 1.0)), 1);
        assert_eq!(cb.nearest(Complex::new(1.0, -0.1)), 0);
        assert_eq!(cb.nearest(Complex::new(-1.0, -0.1)), 2);
        assert!(PhaseCodebook::<f64>::new(0).is_err());
    }

    #[test]
    fn digital_rank_one() {
        let g = UlaGeometry::<f64>::new(8, 0.5).unwrap();
        let a = g.array_response(-0.4);
        let r = CovarianceMatrix::new(&a * a.adjoint(), Side::Tx).unwrap();
        let f = design_digital(&r, 1).unwrap();
        assert!(((a.adjoint() * f)[(0, 0)].norm() - 1.0).abs() < 1e-10);
        let f = design_digital(&CovarianceMatrix::<f64>::identity(4, Side::Tx), 2).unwrap();
        assert!(orthonormality_defect(&f) < 1e-10);
        assert!(design_digital(&r, 9).is_err());
    }

    #[test]
    fn digital_shift_invariant() {
        let r = random_psd(6, 5);
        let a = design_digital(&r, 2).unwrap();
        let b = design_digital(&r.plus_identity(3.0), 2).unwrap();
        assert!(max_principal_sine(&a, &b) < 1e-8);
    }

    #[test]
    fn hybrid_exact_when_feasible() {
        let cb = PhaseCodebook::<f64>::new(2).unwrap();
        let (cand, _) = quantized_steering_candidates(8, 2, &cb);
        let u = cand.column(5).into_owned();
        let r = CovarianceMatrix::new(&u * u.adjoint(), Side::Tx).unwrap();
        let h = design_hybrid(&r, 1, 1, &cb, 3).unwrap();
        let f = h.effective(0);
        let top = design_digital(&r, 1).unwrap();
        assert!(hybrid_residual(&top, &h.rf).unwrap() <= 1e-8);
        assert!(((top.adjoint() * &f)[(0, 0)].norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hybrid_constraints() {
        let cb = PhaseCodebook::<f64>::new(2).unwrap();
        let r = random_psd(16, 9);
        let k = 5;
        let h = design_hybrid(&r, 4, 2, &cb, k).unwrap();
        assert!((h.total_power() - (k * 2) as f64).abs() < 1e-8);
        let scale = 1.0 / 4.0;
        for i in 0..16 {
            for j in 0..4 {
                assert_eq!(h.rf[(i, j)], cb.unit(h.rf_levels[(i, j)]) * scale);
            }
        }
    }

    #[test]
    fn hybrid_full_rf_dominates() {
        let cb = PhaseCodebook::<f64>::new(2).unwrap();
        let r = random_psd(8, 21);
        let u = design_digital(&r, 2).unwrap();
        let overlap = |h: &HybridPrecoder<f64>| {
            let f = h.effective(0);
            let q = f.clone().qr().q();
            (u.adjoint() * q).norm_squared() / 2.0
        };
        let small = design_hybrid(&r, 2, 2, &cb, 1).unwrap();
        let full = design_hybrid(&r, 8, 2, &cb, 1).unwrap();
        assert!(overlap(&full) >= overlap(&small) - 1e-12);
    }
}
