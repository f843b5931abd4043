//! Wideband clustered ULA channels.
//!
//! A [`ClusterSet`] is the ground truth of an experiment: per-cluster mean
//! angles, delays, powers and the rays inside each cluster. It expands into
//! delay taps ([`build_delay_taps`]) and per-subcarrier matrices
//! ([`delay_to_freq`]). [`RayGeometry`] is the factored form
//! `H[k] = sqrt(N_rx N_tx) A_rx diag(g_k) A_tx^H` used by the Monte-Carlo
//! paths, where materializing every tap would dominate the run time.

use std::f64::consts::PI;

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, mismatch, Result};
use crate::scalar::{cis, count, lit, re, CMat, CVec, Real};

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry<T: Real> {
    pub num_antennas: usize,
    /// Element spacing in wavelengths.
    pub spacing: T,
}

impl<T: Real> UlaGeometry<T> {
    pub fn new(num_antennas: usize, spacing: T) -> Result<Self> {
        if num_antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        if !(spacing > T::zero()) {
            return Err(invalid("antenna spacing must be positive"));
        }
        Ok(Self { num_antennas, spacing })
    }

    /// Half-wavelength array.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, lit(0.5))
    }

    /// Spatial frequency `2 pi spacing sin(angle)`.
    pub fn spatial_frequency(&self, angle: T) -> T {
        T::two_pi() * self.spacing * angle.sin()
    }

    /// Unit-norm steering vector `(1/sqrt N) [1, e^{j w}, ..., e^{j (N-1) w}]`.
    pub fn array_response(&self, angle: T) -> CVec<T> {
        let n = self.num_antennas;
        let w = self.spatial_frequency(angle);
        let scale = T::one() / count::<T>(n).sqrt();
        CVec::from_fn(n, |i, _| cis(w * count::<T>(i)) * scale)
    }

    /// Steering vectors for several angles, one per column.
    pub fn response_matrix(&self, angles: &[T]) -> CMat<T> {
        let mut m = CMat::zeros(self.num_antennas, angles.len());
        for (j, &a) in angles.iter().enumerate() {
            m.set_column(j, &self.array_response(a));
        }
        m
    }
}

/// Raised-cosine impulse response, normalized so that `p(0) = 1`.
///
/// At `|t| = T_s / (2 rolloff)` the removable singularity is replaced by its
/// limit `(pi / 4) sinc(1 / (2 rolloff))`.
pub fn raised_cosine<T: Real>(t: T, rolloff: T, symbol_interval: T) -> T {
    let x = t / symbol_interval;
    let sinc = |u: T| -> T {
        if u.abs() < lit(1e-12) {
            T::one()
        } else {
            let pu = T::pi() * u;
            pu.sin() / pu
        }
    };
    if rolloff <= T::zero() {
        return sinc(x);
    }
    let two_bx = lit::<T>(2.0) * rolloff * x;
    let denom = T::one() - two_bx * two_bx;
    if denom.abs() < lit(1e-9) {
        return T::frac_pi_4() * sinc(T::one() / (lit::<T>(2.0) * rolloff));
    }
    sinc(x) * (T::pi() * rolloff * x).cos() / denom
}

/// A single propagation path inside a cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T: Real> {
    /// Complex gain including path loss.
    pub gain: Complex<T>,
    /// Delay relative to the cluster mean, seconds.
    pub rel_delay: T,
    /// Arrival angle offset, radians.
    pub aoa_shift: T,
    /// Departure angle offset, radians.
    pub aod_shift: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T: Real> {
    pub mean_delay: T,
    pub mean_aoa: T,
    pub mean_aod: T,
    /// Fraction of the covariance power carried by this cluster.
    pub power: T,
    pub rays: Vec<Ray<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Sub6,
    MmWave,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet<T: Real> {
    pub clusters: Vec<Cluster<T>>,
    pub band: Band,
    /// Large-scale power gain applied to every ray (path loss).
    pub path_gain: T,
}

impl<T: Real> ClusterSet<T> {
    pub fn num_rays(&self) -> usize {
        self.clusters.iter().map(|c| c.rays.len()).sum()
    }

    pub fn total_power(&self) -> T {
        self.clusters.iter().fold(T::zero(), |a, c| a + c.power)
    }

    /// Rescales cluster powers to sum to one.
    pub fn normalize_powers(&mut self) {
        let total = self.total_power();
        if total > T::zero() {
            for c in &mut self.clusters {
                c.power /= total;
            }
        }
    }

    /// Per-ray gain variance `path_gain * power_c / R_c`.
    pub fn ray_gain_variance(&self, cluster: usize) -> T {
        let c = &self.clusters[cluster];
        self.path_gain * c.power / count::<T>(c.rays.len().max(1))
    }

    /// Draws fresh IID circular Gaussian ray gains, keeping geometry fixed.
    pub fn redraw_gains<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for ci in 0..self.clusters.len() {
            let sd = (self.ray_gain_variance(ci) * lit(0.5)).sqrt();
            for ray in &mut self.clusters[ci].rays {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                ray.gain = Complex::new(lit::<T>(a) * sd, lit::<T>(b) * sd);
            }
        }
    }

    /// Same geometry and powers with every gain multiplied by `factor`.
    pub fn scaled_gains(&self, factor: T) -> Self {
        let mut out = self.clone();
        for c in &mut out.clusters {
            for r in &mut c.rays {
                r.gain *= factor;
            }
        }
        out
    }

    /// Expands the clusters into per-ray steering matrices for the given arrays.
    pub fn ray_geometry(&self, rx: &UlaGeometry<T>, tx: &UlaGeometry<T>) -> RayGeometry<T> {
        let mut aoa = Vec::with_capacity(self.num_rays());
        let mut aod = Vec::with_capacity(self.num_rays());
        let mut delays = Vec::with_capacity(self.num_rays());
        for c in &self.clusters {
            for r in &c.rays {
                aoa.push(c.mean_aoa + r.aoa_shift);
                aod.push(c.mean_aod + r.aod_shift);
                delays.push(c.mean_delay + r.rel_delay);
            }
        }
        RayGeometry {
            a_rx: rx.response_matrix(&aoa),
            a_tx: tx.response_matrix(&aod),
            delays,
        }
    }

    /// Ray gains in cluster-major order, matching [`RayGeometry`] columns.
    pub fn gains(&self) -> CVec<T> {
        let g: Vec<Complex<T>> = self.clusters.iter().flat_map(|c| c.rays.iter().map(|r| r.gain)).collect();
        CVec::from_vec(g)
    }
}

/// Delay-domain MIMO channel: one `N_rx x N_tx` matrix per tap.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub delay_taps: Vec<CMat<T>>,
    pub sample_interval: T,
}

/// Frequency-domain MIMO channel: one matrix per subcarrier `k = 0..K-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannel<T: Real> {
    pub subcarriers: Vec<CMat<T>>,
}

impl<T: Real> FreqChannel<T> {
    pub fn num_subcarriers(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.subcarriers.first().map(|m| m.shape()).unwrap_or((0, 0))
    }
}

/// `H[d] = sqrt(N_rx N_tx) sum_c sum_r g_r p(d T_s - tau_c - tau_r) a_rx a_tx^H`.
pub fn build_delay_taps<T: Real>(
    clusters: &ClusterSet<T>,
    rx: &UlaGeometry<T>,
    tx: &UlaGeometry<T>,
    num_taps: usize,
    sample_interval: T,
    pulse: impl Fn(T) -> T,
) -> Result<ChannelRealization<T>> {
    if num_taps == 0 {
        return Err(invalid("need at least one delay tap"));
    }
    if !(sample_interval > T::zero()) {
        return Err(invalid("sample interval must be positive"));
    }
    let (nr, nt) = (rx.num_antennas, tx.num_antennas);
    let scale = count::<T>(nr * nt).sqrt();
    let mut taps = vec![CMat::zeros(nr, nt); num_taps];
    for c in &clusters.clusters {
        for r in &c.rays {
            let outer = rx.array_response(c.mean_aoa + r.aoa_shift)
                * tx.array_response(c.mean_aod + r.aod_shift).adjoint();
            for (d, tap) in taps.iter_mut().enumerate() {
                let p = pulse(count::<T>(d) * sample_interval - c.mean_delay - r.rel_delay);
                if p != T::zero() {
                    *tap += &outer * (r.gain * re(p * scale));
                }
            }
        }
    }
    Ok(ChannelRealization { delay_taps: taps, sample_interval })
}

/// `H[k] = sum_d H[d] exp(-j 2 pi k d / K)` for `k = 0..K-1`.
pub fn delay_to_freq<T: Real>(ch: &ChannelRealization<T>, num_subcarriers: usize) -> Result<FreqChannel<T>> {
    let d = ch.delay_taps.len();
    if d == 0 {
        return Err(invalid("channel has no taps"));
    }
    if num_subcarriers < d {
        return Err(invalid(format!("{num_subcarriers} subcarriers cannot resolve {d} taps")));
    }
    let shape = ch.delay_taps[0].shape();
    if ch.delay_taps.iter().any(|t| t.shape() != shape) {
        return Err(mismatch("delay taps differ in shape"));
    }
    let kk = count::<T>(num_subcarriers);
    let subcarriers = (0..num_subcarriers)
        .map(|k| {
            let mut h = CMat::zeros(shape.0, shape.1);
            for (di, tap) in ch.delay_taps.iter().enumerate() {
                let phase = -T::two_pi() * count::<T>((k * di) % num_subcarriers) / kk;
                h += tap * cis(phase);
            }
            h
        })
        .collect();
    Ok(FreqChannel { subcarriers })
}

/// Factored per-ray representation of a cluster set on a pair of arrays.
#[derive(Debug, Clone)]
pub struct RayGeometry<T: Real> {
    /// `N_rx x R` steering matrix.
    pub a_rx: CMat<T>,
    /// `N_tx x R` steering matrix.
    pub a_tx: CMat<T>,
    /// Absolute delay of every ray, seconds.
    pub delays: Vec<T>,
}

/// Pulse weights `w_r[k] = sum_d p(d T_s - tau_r) exp(-j 2 pi k d / K)` of each
/// ray at one subcarrier.
#[derive(Debug, Clone)]
pub struct SubcarrierResponse<T: Real> {
    pub subcarrier: usize,
    pub weights: CVec<T>,
}

impl<T: Real> RayGeometry<T> {
    pub fn num_rays(&self) -> usize {
        self.delays.len()
    }

    /// Pulse weights for subcarrier `k` of `K`, with `D` taps at interval `T_s`.
    pub fn subcarrier_response(
        &self,
        k: usize,
        num_subcarriers: usize,
        num_taps: usize,
        sample_interval: T,
        pulse: impl Fn(T) -> T,
    ) -> SubcarrierResponse<T> {
        let kk = count::<T>(num_subcarriers);
        let weights = CVec::from_fn(self.num_rays(), |r, _| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for d in 0..num_taps {
                let p = pulse(count::<T>(d) * sample_interval - self.delays[r]);
                if p != T::zero() {
                    let phase = -T::two_pi() * count::<T>((k * d) % num_subcarriers) / kk;
                    acc += cis(phase) * p;
                }
            }
            acc
        });
        SubcarrierResponse { subcarrier: k, weights }
    }

    /// Effective per-ray gains on a subcarrier.
    pub fn effective_gains(&self, gains: &CVec<T>, response: &SubcarrierResponse<T>) -> CVec<T> {
        gains.component_mul(&response.weights)
    }

    fn scale(&self) -> T {
        count::<T>(self.a_rx.nrows() * self.a_tx.nrows()).sqrt()
    }

    /// Full `N_rx x N_tx` matrix for the given effective gains.
    pub fn matrix(&self, effective: &CVec<T>) -> CMat<T> {
        let mut left = self.a_rx.clone();
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= effective[j];
        }
        left * self.a_tx.adjoint() * re(self.scale())
    }

    /// `H x` without forming `H`.
    pub fn apply(&self, effective: &CVec<T>, x: &CVec<T>) -> CVec<T> {
        let t = (self.a_tx.adjoint() * x).component_mul(effective);
        &self.a_rx * t * re(self.scale())
    }

    /// `H^H x` without forming `H`.
    pub fn apply_adjoint(&self, effective: &CVec<T>, x: &CVec<T>) -> CVec<T> {
        let conj = effective.map(|z| z.conj());
        let t = (self.a_rx.adjoint() * x).component_mul(&conj);
        &self.a_tx * t * re(self.scale())
    }
}

/// Power gain of a path-loss model referenced to free space at 1 m:
/// `(lambda / (4 pi))^2 / d^exponent`.
pub fn path_gain(carrier_hz: f64, distance_m: f64, exponent: f64) -> f64 {
    let lambda = 299_792_458.0 / carrier_hz;
    (lambda / (4.0 * PI)).powi(2) / distance_m.powf(exponent)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CongruenceMode {
    /// Both bands share cluster means, delays, powers and ray offsets.
    Congruent,
    /// mmWave clusters are a perturbed subset of the sub-6 GHz clusters.
    Realistic,
}

/// Per-band cluster statistics. Angles in radians, delays in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandParams {
    pub num_clusters: usize,
    pub rays_per_cluster: usize,
    pub aoa_spread: f64,
    pub aod_spread: f64,
    /// RMS delay spread; cluster delays are exponential with this mean and
    /// in-cluster ray delays are half-normal with a tenth of it.
    pub rms_delay: f64,
    /// Exponential power-decay parameter over normalized cluster delay.
    pub power_decay: f64,
    /// Large-scale power gain applied to every ray.
    pub path_gain: f64,
}

/// A cluster with pinned mean angles and power. Its delay is drawn uniformly
/// from `[0, max_delay]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedCluster {
    pub aoa: f64,
    pub aod: f64,
    pub power: f64,
    #[serde(default)]
    pub max_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterGenConfig {
    pub mode: CongruenceMode,
    pub sub6: BandParams,
    pub mmwave: BandParams,
    /// Mean angles are drawn from `[-angle_limit, angle_limit)`.
    pub angle_limit: f64,
    /// Standard deviation of the Gaussian shift applied to mmWave cluster means
    /// in realistic mode.
    pub mean_perturbation: f64,
    /// When non-empty (congruent mode only) these replace the random cluster
    /// means and powers.
    #[serde(default)]
    pub fixed_clusters: Vec<FixedCluster>,
}

impl ClusterGenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("sub6", &self.sub6), ("mmwave", &self.mmwave)] {
            if b.num_clusters == 0 && self.fixed_clusters.is_empty() {
                return Err(invalid(format!("{name}: zero clusters")));
            }
            if b.rays_per_cluster == 0 {
                return Err(invalid(format!("{name}: zero rays per cluster")));
            }
            for (field, v) in [
                ("aoa_spread", b.aoa_spread),
                ("aod_spread", b.aod_spread),
                ("rms_delay", b.rms_delay),
                ("path_gain", b.path_gain),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(invalid(format!("{name}.{field} must be finite and non-negative")));
                }
            }
            if !(b.power_decay > 0.0) {
                return Err(invalid(format!("{name}.power_decay must be positive")));
            }
        }
        if !(self.angle_limit > 0.0 && self.angle_limit <= PI) {
            return Err(invalid("angle_limit must lie in (0, pi]"));
        }
        if !(self.mean_perturbation >= 0.0) {
            return Err(invalid("mean_perturbation must be non-negative"));
        }
        if self.mode == CongruenceMode::Realistic {
            if !self.fixed_clusters.is_empty() {
                return Err(invalid("fixed clusters are only supported in congruent mode"));
            }
            if self.mmwave.num_clusters > self.sub6.num_clusters {
                return Err(invalid("realistic mode draws mmWave clusters from the sub-6 set"));
            }
        }
        for f in &self.fixed_clusters {
            if !(f.power >= 0.0) || !(f.max_delay >= 0.0) {
                return Err(invalid("fixed cluster power and delay must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = (a + PI).rem_euclid(two_pi) - PI;
    if w >= PI {
        w - two_pi
    } else {
        w
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    } else {
        0.0
    }
}

fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if mean > 0.0 {
        Exp::new(1.0 / mean).expect("positive rate").sample(rng)
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
struct RayDraw {
    rel_delay: f64,
    aoa_shift: f64,
    aod_shift: f64,
}

fn draw_rays<R: Rng + ?Sized>(rng: &mut R, p: &BandParams) -> Vec<RayDraw> {
    (0..p.rays_per_cluster)
        .map(|_| RayDraw {
            rel_delay: normal(rng, p.rms_delay / 10.0).abs(),
            aoa_shift: wrap_angle(normal(rng, p.aoa_spread)),
            aod_shift: wrap_angle(normal(rng, p.aod_spread)),
        })
        .collect()
}

#[derive(Debug, Clone)]
struct ClusterDraw {
    delay: f64,
    aoa: f64,
    aod: f64,
    power: f64,
}

fn delay_weighted_powers(delays: &[f64], decay: f64) -> Vec<f64> {
    let max = delays.iter().cloned().fold(0.0_f64, f64::max);
    delays
        .iter()
        .map(|&d| {
            let u = if max > 0.0 { d / max } else { 0.0 };
            (-u / decay).exp() / decay
        })
        .collect()
}

fn assemble<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    band: Band,
    p: &BandParams,
    clusters: &[ClusterDraw],
    rays: &[Vec<RayDraw>],
) -> ClusterSet<T> {
    let mut set = ClusterSet {
        clusters: clusters
            .iter()
            .zip(rays)
            .map(|(c, rs)| Cluster {
                mean_delay: lit(c.delay),
                mean_aoa: lit(c.aoa),
                mean_aod: lit(c.aod),
                power: lit(c.power),
                rays: rs
                    .iter()
                    .map(|r| Ray {
                        gain: Complex::new(T::zero(), T::zero()),
                        rel_delay: lit(r.rel_delay),
                        aoa_shift: lit(r.aoa_shift),
                        aod_shift: lit(r.aod_shift),
                    })
                    .collect(),
            })
            .collect(),
        band,
        path_gain: lit(p.path_gain),
    };
    set.normalize_powers();
    set.redraw_gains(rng);
    set
}

/// Draws the sub-6 GHz and mmWave cluster sets of one experiment trial.
pub fn gen_cluster_sets<T: Real, R: Rng + ?Sized>(
    cfg: &ClusterGenConfig,
    rng: &mut R,
) -> Result<(ClusterSet<T>, ClusterSet<T>)> {
    cfg.validate()?;
    let limit = cfg.angle_limit;
    let uniform_angle = |rng: &mut R| -> f64 { rng.random_range(-limit..limit) };

    match cfg.mode {
        CongruenceMode::Congruent => {
            let base: Vec<ClusterDraw> = if cfg.fixed_clusters.is_empty() {
                let n = cfg.sub6.num_clusters;
                let mut draws: Vec<ClusterDraw> = (0..n)
                    .map(|i| ClusterDraw {
                        delay: if i == 0 { 0.0 } else { exponential(rng, cfg.sub6.rms_delay) },
                        aoa: uniform_angle(rng),
                        aod: uniform_angle(rng),
                        power: 0.0,
                    })
                    .collect();
                let delays: Vec<f64> = draws.iter().map(|d| d.delay).collect();
                for (d, p) in draws.iter_mut().zip(delay_weighted_powers(&delays, cfg.sub6.power_decay)) {
                    d.power = p;
                }
                draws
            } else {
                cfg.fixed_clusters
                    .iter()
                    .map(|f| ClusterDraw {
                        delay: if f.max_delay > 0.0 { rng.random_range(0.0..=f.max_delay) } else { 0.0 },
                        aoa: f.aoa,
                        aod: f.aod,
                        power: f.power,
                    })
                    .collect()
            };
            let sub6_rays: Vec<Vec<RayDraw>> = base.iter().map(|_| draw_rays(rng, &cfg.sub6)).collect();
            let mm_rays: Vec<Vec<RayDraw>> = if cfg.mmwave.rays_per_cluster == cfg.sub6.rays_per_cluster
                && cfg.mmwave.aoa_spread == cfg.sub6.aoa_spread
                && cfg.mmwave.aod_spread == cfg.sub6.aod_spread
                && cfg.mmwave.rms_delay == cfg.sub6.rms_delay
            {
                sub6_rays.clone()
            } else {
                base.iter().map(|_| draw_rays(rng, &cfg.mmwave)).collect()
            };
            let sub6 = assemble(rng, Band::Sub6, &cfg.sub6, &base, &sub6_rays);
            let mm = assemble(rng, Band::MmWave, &cfg.mmwave, &base, &mm_rays);
            Ok((sub6, mm))
        }
        CongruenceMode::Realistic => {
            let n = cfg.sub6.num_clusters;
            let mut draws: Vec<ClusterDraw> = (0..n)
                .map(|i| ClusterDraw {
                    delay: if i == 0 { 0.0 } else { exponential(rng, cfg.sub6.rms_delay) },
                    aoa: uniform_angle(rng),
                    aod: uniform_angle(rng),
                    power: 0.0,
                })
                .collect();
            let delays: Vec<f64> = draws.iter().map(|d| d.delay).collect();
            for (d, p) in draws.iter_mut().zip(delay_weighted_powers(&delays, cfg.sub6.power_decay)) {
                d.power = p;
            }

            let picked = rand::seq::index::sample(rng, n, cfg.mmwave.num_clusters).into_vec();
            let mut picked = picked;
            picked.sort_unstable();
            let mut mm_draws: Vec<ClusterDraw> = picked
                .iter()
                .map(|&i| ClusterDraw {
                    delay: draws[i].delay,
                    aoa: (draws[i].aoa + normal(rng, cfg.mean_perturbation)).clamp(-limit, limit - 1e-12),
                    aod: (draws[i].aod + normal(rng, cfg.mean_perturbation)).clamp(-limit, limit - 1e-12),
                    power: 0.0,
                })
                .collect();
            let mm_delays: Vec<f64> = mm_draws.iter().map(|d| d.delay).collect();
            for (d, p) in mm_draws.iter_mut().zip(delay_weighted_powers(&mm_delays, cfg.mmwave.power_decay)) {
                d.power = p;
            }

            let sub6_rays: Vec<Vec<RayDraw>> = draws.iter().map(|_| draw_rays(rng, &cfg.sub6)).collect();
            let mm_rays: Vec<Vec<RayDraw>> = mm_draws.iter().map(|_| draw_rays(rng, &cfg.mmwave)).collect();
            let sub6 = assemble(rng, Band::Sub6, &cfg.sub6, &draws, &sub6_rays);
            let mm = assemble(rng, Band::MmWave, &cfg.mmwave, &mm_draws, &mm_rays);
            Ok((sub6, mm))
        }
    }
}
