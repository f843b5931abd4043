//! Compressed covariance estimation for hybrid receivers.
//!
//! Each snapshot is two training frames sent with the complementary
//! precoders of [`omni_precoder_pair`], which sum to a scaled first basis
//! vector and turn the MIMO link into a SIMO one. The receiver observes
//! `y_t = W_t^H (H_t (f1 + f2) + n_t)` through a fresh random phase-shifter
//! combiner per snapshot, and [`lw_dcomp`] recovers a sparse covariance on a
//! dictionary grid. Out-of-band prior weights bias the greedy atom choice.

use nalgebra::{Complex, ComplexField};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::UlaGeometry;
use crate::covariance::{CovarianceMatrix, Side};
use crate::error::{invalid, mismatch, Error, Result};
use crate::linalg::{hermitian_part, pinv, project_psd};
use crate::precoding::PhaseCodebook;
use crate::scalar::{count, lit, re, CMat, CVec, Real};

/// Complementary pair whose sum is `(2 / sqrt(N)) e_1`.
pub fn omni_precoder_pair<T: Real>(n_tx: usize) -> Result<(CVec<T>, CVec<T>)> {
    if n_tx == 0 {
        return Err(invalid("precoder needs at least one antenna"));
    }
    let s = T::one() / count::<T>(n_tx).sqrt();
    let f1 = CVec::from_element(n_tx, re(s));
    let f2 = CVec::from_fn(n_tx, |i, _| re(if i == 0 { s } else { -s }));
    Ok((f1, f2))
}

/// Angle grid with atoms `a(theta_b)` for `sin(theta_b)` uniform on `[-1, 1)`.
#[derive(Debug, Clone)]
pub struct Dictionary<T: Real> {
    pub grid_angles: Vec<T>,
    pub atoms: CMat<T>,
}

impl<T: Real> Dictionary<T> {
    pub fn size(&self) -> usize {
        self.grid_angles.len()
    }

    /// Atoms of another array evaluated on the same grid.
    pub fn on_array(&self, geom: &UlaGeometry<T>) -> Self {
        Self { grid_angles: self.grid_angles.clone(), atoms: geom.response_matrix(&self.grid_angles) }
    }

    /// Columns `S` of the atom matrix.
    pub fn select(&self, support: &[usize]) -> CMat<T> {
        self.atoms.select_columns(support)
    }
}

pub fn build_dictionary<T: Real>(geom: &UlaGeometry<T>, oversampling: usize) -> Result<Dictionary<T>> {
    if oversampling == 0 {
        return Err(invalid("dictionary oversampling must be at least 1"));
    }
    let b = oversampling * geom.num_antennas;
    let step = lit::<T>(2.0) / count::<T>(b);
    let grid_angles: Vec<T> = (0..b).map(|i| (-T::one() + step * count::<T>(i)).asin()).collect();
    let atoms = geom.response_matrix(&grid_angles);
    Ok(Dictionary { grid_angles, atoms })
}

/// Received vectors and the combiners that produced them.
#[derive(Debug, Clone)]
pub struct SnapshotSet<T: Real> {
    pub received: Vec<CVec<T>>,
    pub combiners: Vec<CMat<T>>,
    /// Per-frame noise variance before combining.
    pub noise_var: T,
    /// Antenna count of the omni-directional far end.
    pub omni_antennas: usize,
    /// Array whose covariance the snapshots describe.
    pub side: Side,
}

impl<T: Real> SnapshotSet<T> {
    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }

    /// Keeps the first `t` snapshots.
    pub fn truncated(&self, t: usize) -> Self {
        let t = t.min(self.len());
        Self {
            received: self.received[..t].to_vec(),
            combiners: self.combiners[..t].to_vec(),
            noise_var: self.noise_var,
            omni_antennas: self.omni_antennas,
            side: self.side,
        }
    }

    fn validate(&self) -> Result<(usize, usize)> {
        if self.is_empty() {
            return Err(Error::EmptySnapshots);
        }
        if self.received.len() != self.combiners.len() {
            return Err(mismatch("one combiner per snapshot required"));
        }
        let (n, m) = self.combiners[0].shape();
        for (y, w) in self.received.iter().zip(&self.combiners) {
            if w.shape() != (n, m) || y.len() != m {
                return Err(mismatch("snapshots differ in shape"));
            }
        }
        Ok((n, m))
    }
}

/// `N x M` phase-shifter matrix with entries `(1/sqrt N) exp(j zeta)`,
/// `zeta` uniform over the codebook.
pub fn random_combiner<T: Real, R: Rng + ?Sized>(n: usize, m: usize, codebook: &PhaseCodebook<T>, rng: &mut R) -> CMat<T> {
    let scale = T::one() / count::<T>(n).sqrt();
    let levels = codebook.phases.len();
    CMat::from_fn(n, m, |_, _| codebook.unit(rng.random_range(0..levels)) * scale)
}

fn complex_noise<T: Real, R: Rng + ?Sized>(n: usize, var: T, rng: &mut R) -> CVec<T> {
    let sd = (var * lit(0.5)).sqrt();
    CVec::from_fn(n, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        Complex::new(lit::<T>(a) * sd, lit::<T>(b) * sd)
    })
}

/// Simulates `combiners.len()` snapshots. `channel(t, x)` must return
/// `H_t x` for the snapshot-`t` channel, whose far end has `omni_antennas`
/// elements.
pub fn collect_snapshots<T: Real, R: Rng + ?Sized>(
    mut channel: impl FnMut(usize, &CVec<T>) -> CVec<T>,
    combiners: Vec<CMat<T>>,
    omni_antennas: usize,
    noise_var: T,
    side: Side,
    rng: &mut R,
) -> Result<SnapshotSet<T>> {
    if combiners.is_empty() {
        return Err(Error::EmptySnapshots);
    }
    if !(noise_var >= T::zero()) {
        return Err(invalid("noise variance must be non-negative"));
    }
    let (f1, f2) = omni_precoder_pair::<T>(omni_antennas)?;
    let n = combiners[0].nrows();
    let mut received = Vec::with_capacity(combiners.len());
    for (t, w) in combiners.iter().enumerate() {
        if w.nrows() != n {
            return Err(mismatch("combiners differ in antenna count"));
        }
        let r1 = channel(t, &f1) + complex_noise(n, noise_var, rng);
        let r2 = channel(t, &f2) + complex_noise(n, noise_var, rng);
        if r1.len() != n {
            return Err(mismatch("channel output length differs from combiner rows"));
        }
        received.push(w.adjoint() * (r1 + r2));
    }
    Ok(SnapshotSet { received, combiners, noise_var, omni_antennas, side })
}

/// Prior probabilities on the grid and their additive logit weights.
#[derive(Debug, Clone)]
pub struct PriorWeights<T: Real> {
    pub probabilities: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> PriorWeights<T> {
    /// Zero weights: plain DCOMP.
    pub fn uniform(size: usize) -> Self {
        Self { probabilities: vec![lit(0.5); size], weights: vec![T::zero(); size] }
    }

    pub fn from_probabilities(probabilities: Vec<T>, j_w: T) -> Self {
        let weights = logit_weight(&probabilities, j_w);
        let probabilities = probabilities.into_iter().map(clamp_probability).collect();
        Self { probabilities, weights }
    }
}

/// Out-of-band support prior
/// `rho = J_rho |(1/B) sum_b [A^H R A]_{:,b}| / max |...|`,
/// with `A` the sub-6 GHz atoms on the mmWave grid.
pub fn prob_proxy<T: Real>(r_sub6: &CovarianceMatrix<T>, sub6_dict: &Dictionary<T>, j_rho: T) -> Result<Vec<T>> {
    if !(j_rho > T::zero() && j_rho <= T::one()) {
        return Err(invalid("J_rho must lie in (0, 1]"));
    }
    if sub6_dict.atoms.nrows() != r_sub6.dim() {
        return Err(mismatch("sub-6 dictionary and covariance sizes differ"));
    }
    let a = &sub6_dict.atoms;
    let b = sub6_dict.size();
    let col_mean = a.column_sum() * re(T::one() / count::<T>(b));
    let spectrum = a.adjoint() * (r_sub6.mat() * col_mean);
    let mags: Vec<T> = spectrum.iter().map(|z| z.modulus()).collect();
    let max = mags.iter().copied().fold(T::zero(), |m, v| m.max(v));
    if max <= T::zero() {
        return Ok(vec![j_rho; b]);
    }
    Ok(mags.into_iter().map(|v| j_rho * v / max).collect())
}

const RHO_CLAMP: f64 = 1e-6;

fn clamp_probability<T: Real>(p: T) -> T {
    let lo = lit::<T>(RHO_CLAMP);
    p.max(lo).min(T::one() - lo)
}

/// `w_i = J_w log(rho_i / (1 - rho_i))` on probabilities clamped to
/// `[1e-6, 1 - 1e-6]`.
pub fn logit_weight<T: Real>(rho: &[T], j_w: T) -> Vec<T> {
    rho.iter()
        .map(|&p| {
            let p = clamp_probability(p);
            j_w * (p / (T::one() - p)).ln()
        })
        .collect()
}

/// Output of [`lw_dcomp`].
#[derive(Debug, Clone)]
pub struct CompressedEstimate<T: Real> {
    /// Selected grid indices in selection order.
    pub support: Vec<usize>,
    /// Averaged gain covariance on the support.
    pub gain_cov: CMat<T>,
    pub assembled: CovarianceMatrix<T>,
}

struct Projected<T: Real> {
    /// `W_t^H A` per snapshot.
    phi: Vec<CMat<T>>,
}

impl<T: Real> Projected<T> {
    fn new(snapshots: &SnapshotSet<T>, dict: &Dictionary<T>) -> Self {
        Self { phi: snapshots.combiners.iter().map(|w| w.adjoint() * &dict.atoms).collect() }
    }

    /// `sum_t |phi_{t,i}^H V_t phi_{t,i}|` for every atom `i`.
    fn data_term(&self, residuals: &[CMat<T>]) -> Vec<T> {
        let b = self.phi[0].ncols();
        let mut score = vec![T::zero(); b];
        for (phi, v) in self.phi.iter().zip(residuals) {
            let vp = v * phi;
            for (i, s) in score.iter_mut().enumerate() {
                let q = phi.column(i).dotc(&vp.column(i));
                *s += q.modulus();
            }
        }
        score
    }
}

/// Median over atoms of the first-iteration data term, the natural scale for
/// `J_w`.
pub fn data_term_median<T: Real>(snapshots: &SnapshotSet<T>, dict: &Dictionary<T>) -> Result<T> {
    snapshots.validate()?;
    let proj = Projected::new(snapshots, dict);
    let v: Vec<CMat<T>> = snapshots.received.iter().map(|y| y * y.adjoint()).collect();
    let mut s = proj.data_term(&v);
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = s.len();
    if n == 0 {
        return Ok(T::zero());
    }
    Ok(if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) * lit(0.5) })
}

/// Logit-weighted dynamic covariance OMP. With all-zero weights this is
/// plain DCOMP.
pub fn lw_dcomp<T: Real>(
    snapshots: &SnapshotSet<T>,
    dict: &Dictionary<T>,
    noise_var: T,
    weights: &PriorWeights<T>,
) -> Result<CompressedEstimate<T>> {
    let (n, m) = snapshots.validate()?;
    if dict.atoms.nrows() != n {
        return Err(mismatch(format!("dictionary has {} rows, combiners {n}", dict.atoms.nrows())));
    }
    let b = dict.size();
    if weights.weights.len() != b {
        return Err(mismatch(format!("{} weights for {b} atoms", weights.weights.len())));
    }
    let t_count = snapshots.len();
    let proj = Projected::new(snapshots, dict);
    let ryy: Vec<CMat<T>> = snapshots.received.iter().map(|y| y * y.adjoint()).collect();
    let mut residuals = ryy.clone();
    let threshold = lit::<T>(2.0) * noise_var
        * snapshots.combiners.iter().fold(T::zero(), |a, w| a + (w.adjoint() * w).norm());
    let residual_sum = |v: &[CMat<T>]| v.iter().fold(T::zero(), |a, x| a + x.norm());

    let mut support: Vec<usize> = Vec::new();
    let mut per_snapshot: Vec<CMat<T>> = vec![CMat::zeros(0, 0); t_count];
    let mut iter = 0;
    while residual_sum(&residuals) > threshold && iter < m {
        let data = proj.data_term(&residuals);
        let mut best: Option<(usize, T)> = None;
        for i in 0..b {
            if support.contains(&i) {
                continue;
            }
            let s = data[i] + weights.weights[i];
            if best.is_none_or(|(_, v)| s > v) {
                best = Some((i, s));
            }
        }
        let Some((j, _)) = best else { break };
        support.push(j);
        for t in 0..t_count {
            let phi_s = proj.phi[t].select_columns(&support);
            let p = pinv(&phi_s)?;
            let g = &p * &ryy[t] * p.adjoint();
            residuals[t] = &ryy[t] - &phi_s * &g * phi_s.adjoint();
            per_snapshot[t] = g;
        }
        iter += 1;
    }

    let k = support.len();
    let mut gain_cov = CMat::zeros(k, k);
    if k > 0 {
        for g in &per_snapshot {
            gain_cov += g;
        }
        gain_cov *= re(T::one() / count::<T>(t_count));
    }
    let est = CompressedEstimate { support, gain_cov, assembled: CovarianceMatrix::zeros(n, snapshots.side) };
    let assembled = assemble_covariance(&est, dict, snapshots.omni_antennas, snapshots.side)?;
    Ok(CompressedEstimate { assembled, ..est })
}

/// `(N_omni / 4) A_S R_g A_S^H`, made Hermitian and projected onto the PSD
/// cone.
pub fn assemble_covariance<T: Real>(
    est: &CompressedEstimate<T>,
    dict: &Dictionary<T>,
    omni_antennas: usize,
    side: Side,
) -> Result<CovarianceMatrix<T>> {
    let n = dict.atoms.nrows();
    let k = est.support.len();
    if k == 0 {
        return Ok(CovarianceMatrix::zeros(n, side));
    }
    if est.support.iter().any(|&i| i >= dict.size()) {
        return Err(invalid("support index outside the dictionary"));
    }
    if est.gain_cov.shape() != (k, k) {
        return Err(mismatch("gain covariance does not match support size"));
    }
    let a_s = dict.select(&est.support);
    let scale = count::<T>(omni_antennas) / lit::<T>(4.0);
    let raw = &a_s * &est.gain_cov * a_s.adjoint() * re(scale);
    CovarianceMatrix::new(project_psd(&hermitian_part(&raw))?, side)
}

/// Transmit-side estimate: the roles of the arrays are swapped, so
/// `channel_adjoint(t, x)` must return `H_t^H x`, the combiners act on the
/// transmit array and the receive array sends the omni pair.
#[allow(clippy::too_many_arguments)]
pub fn tx_side_estimate<T: Real, R: Rng + ?Sized>(
    channel_adjoint: impl FnMut(usize, &CVec<T>) -> CVec<T>,
    tx_combiners: Vec<CMat<T>>,
    n_rx: usize,
    noise_var: T,
    dict: &Dictionary<T>,
    weights: &PriorWeights<T>,
    rng: &mut R,
) -> Result<CompressedEstimate<T>> {
    let snaps = collect_snapshots(channel_adjoint, tx_combiners, n_rx, noise_var, Side::Tx, rng)?;
    lw_dcomp(&snaps, dict, noise_var, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn omni_pair_identity() {
        for n in 1..9 {
            let (f1, f2) = omni_precoder_pair::<f64>(n).unwrap();
            let sum = &f1 + &f2;
            let two = 2.0 / (n as f64).sqrt();
            let (s1, s2) = (1.0 / (n as f64).sqrt(), 1.0 / (n as f64).sqrt());
            assert_eq!(sum[0], Complex::new(s1 + s2, 0.0));
            assert!((sum[0].re - two).abs() < 1e-15);
            for i in 1..n {
                assert_eq!(sum[i], Complex::new(0.0, 0.0));
            }
            assert!((f1.norm() - 1.0).abs() < 1e-12 && (f2.norm() - 1.0).abs() < 1e-12);
        }
        let (f1, f2) = omni_precoder_pair::<f64>(4).unwrap();
        assert_eq!(&f1 + &f2, CVec::from_vec(vec![re(1.0), re(0.0), re(0.0), re(0.0)]));
        assert!(omni_precoder_pair::<f64>(0).is_err());
    }

    #[test]
    fn dictionary_grid() {
        let g = UlaGeometry::<f64>::new(4, 0.5).unwrap();
        let d = build_dictionary(&g, 1).unwrap();
        let gram = d.atoms.adjoint() * &d.atoms;
        assert!((gram - CMat::<f64>::identity(4, 4)).norm() < 1e-10);
        assert!((d.grid_angles[0] + std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let d = build_dictionary(&g, 2).unwrap();
        assert_eq!(d.size(), 8);
        let gram = d.atoms.adjoint() * &d.atoms;
        let adj = gram[(0, 1)].norm();
        for i in 0..7 {
            assert!((gram[(i, i + 1)].norm() - adj).abs() < 1e-12);
        }
        assert!((d.grid_angles[7].sin() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn prob_proxy_examples() {
        let g = UlaGeometry::<f64>::new(8, 0.5).unwrap();
        let d = build_dictionary(&g, 2).unwrap();
        let rho = prob_proxy(&CovarianceMatrix::identity(8, Side::Rx), &d, 0.9).unwrap();
        assert!(rho.iter().all(|&p| (p - 0.9).abs() < 1e-12));

        let a = d.atoms.column(5).into_owned();
        let r = CovarianceMatrix::new(&a * a.adjoint(), Side::Rx).unwrap();
        let rho = prob_proxy(&r, &d, 0.9).unwrap();
        let best = rho.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert_eq!(best, 5);
        assert!((rho[5] - 0.9).abs() < 1e-12);
        let doubled = prob_proxy(&r.scaled(2.0), &d, 0.9).unwrap();
        for (x, y) in rho.iter().zip(&doubled) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logit_weight(&[0.5], 3.0), vec![0.0]);
        assert!(logit_weight(&[0.9, 0.1, 1.0], 0.0).iter().all(|&w| w == 0.0));
        let w = logit_weight(&[0.9, 0.1], 1.0);
        assert!((w[0] - 9f64.ln()).abs() < 1e-12 && (w[1] + 9f64.ln()).abs() < 1e-12);
        let w = logit_weight(&[1.0, 0.0], 1.0);
        assert!(w.iter().all(|v| v.is_finite()));
    }

    fn on_grid_snapshots(b_star: usize, t: usize, seed: u64) -> (SnapshotSet<f64>, Dictionary<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m, n_tx) = (16, 4, 4);
        let g = UlaGeometry::<f64>::new(n, 0.5).unwrap();
        let d = build_dictionary(&g, 2).unwrap();
        let a = d.atoms.column(b_star).into_owned();
        let tx = UlaGeometry::<f64>::new(n_tx, 0.5).unwrap();
        let at = tx.array_response(0.3);
        let cb = PhaseCodebook::new(2).unwrap();
        let combiners: Vec<CMat<f64>> = (0..t).map(|_| random_combiner(n, m, &cb, &mut rng)).collect();
        let gains: Vec<Complex<f64>> = (0..t)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                Complex::new(x, y)
            })
            .collect();
        let scale = ((n * n_tx) as f64).sqrt();
        let snaps = collect_snapshots(
            |ti, x| &a * (at.dotc(x) * gains[ti] * scale),
            combiners,
            n_tx,
            0.0,
            Side::Rx,
            &mut rng,
        )
        .unwrap();
        (snaps, d)
    }

    #[test]
    fn on_grid_single_path_recovered() {
        let (snaps, d) = on_grid_snapshots(11, 30, 3);
        let est = lw_dcomp(&snaps, &d, 0.0, &PriorWeights::uniform(d.size())).unwrap();
        assert_eq!(est.support[0], 11);
        let a = d.atoms.column(11).into_owned();
        let u = est.assembled.eigen().unwrap().leading(1);
        assert!((a.adjoint() * u)[(0, 0)].norm_sqr() > 0.99);
        assert!(est.support.len() <= 4);
    }

    #[test]
    fn zero_signal_gives_empty_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = UlaGeometry::<f64>::new(8, 0.5).unwrap();
        let d = build_dictionary(&g, 2).unwrap();
        let cb = PhaseCodebook::new(2).unwrap();
        let combiners: Vec<CMat<f64>> = (0..5).map(|_| random_combiner(8, 3, &cb, &mut rng)).collect();
        let snaps = collect_snapshots(|_, _| CVec::zeros(8), combiners, 2, 0.0, Side::Rx, &mut rng).unwrap();
        let est = lw_dcomp(&snaps, &d, 0.1, &PriorWeights::uniform(16)).unwrap();
        assert!(est.support.is_empty());
        assert_eq!(est.gain_cov.len(), 0);
        assert_eq!(est.assembled.mat().norm(), 0.0);
    }

    #[test]
    fn empty_snapshot_set_rejected() {
        let g = UlaGeometry::<f64>::new(4, 0.5).unwrap();
        let d = build_dictionary(&g, 2).unwrap();
        let snaps = SnapshotSet::<f64> { received: vec![], combiners: vec![], noise_var: 0.0, omni_antennas: 1, side: Side::Rx };
        assert_eq!(lw_dcomp(&snaps, &d, 0.0, &PriorWeights::uniform(8)).unwrap_err(), Error::EmptySnapshots);
    }

    #[test]
    fn assembly_scalar_algebra() {
        let g = UlaGeometry::<f64>::new(8, 0.5).unwrap();
        let d = build_dictionary(&g, 2).unwrap();
        let est = CompressedEstimate {
            support: vec![3],
            gain_cov: CMat::from_element(1, 1, re(2.0)),
            assembled: CovarianceMatrix::zeros(8, Side::Rx),
        };
        let r = assemble_covariance(&est, &d, 32, Side::Rx).unwrap();
        let a = d.atoms.column(3).into_owned();
        let want = &a * a.adjoint() * re(2.0 * 32.0 / 4.0);
        assert!((r.mat() - want).norm() < 1e-10);
        assert!((r.trace() - 16.0).abs() < 1e-10);
        let empty = CompressedEstimate { support: vec![], gain_cov: CMat::zeros(0, 0), assembled: CovarianceMatrix::zeros(8, Side::Rx) };
        assert_eq!(assemble_covariance(&empty, &d, 32, Side::Rx).unwrap().mat().norm(), 0.0);
    }
}
