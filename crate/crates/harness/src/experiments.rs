//! Monte-Carlo experiments behind the figures, with deterministic seeding.

use std::fmt;

use nalgebra::Complex;
use oob_covariance::channel::{
    gen_cluster_sets, raised_cosine, BandParams, ClusterGenConfig, CongruenceMode, FixedCluster,
};
use oob_covariance::compressed::{
    build_dictionary, collect_snapshots, data_term_median, lw_dcomp, prob_proxy, random_combiner,
};
use oob_covariance::covariance::{rx_covariance, synthesize_multicluster, theoretical_covariance, tx_covariance};
use oob_covariance::metrics::{
    beam_pair, efficiency, effective_rate, expected_snr_loss, monte_carlo_snr, snr_loss_approx, snr_loss_bounds,
    SinglePathLink, SnrMode,
};
use oob_covariance::precoding::design_hybrid;
use oob_covariance::translation::{translate, TranslationParams};
use oob_covariance::{
    CMat, CVec, ClusterSet, CovarianceMatrix, Dictionary, FreqChannel, PasKind, Perturbation, PhaseCodebook,
    PriorWeights, RateConfig, Side, SnapshotSet, UlaGeometry,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::link::{db_to_linear, LinkBudget};
use crate::output::ResultRow;
use crate::seed::trial_seed;
use crate::stats::Welford;

type Res<T> = Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Fig4ClusterCount,
    Fig5EtaSeparation,
    Fig6EtaDistance,
    Fig7RateDistance,
    Fig7bRateSnapshots,
    Fig8SnrBound,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fig4ClusterCount,
        Experiment::Fig5EtaSeparation,
        Experiment::Fig6EtaDistance,
        Experiment::Fig7RateDistance,
        Experiment::Fig7bRateSnapshots,
        Experiment::Fig8SnrBound,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Fig4ClusterCount => "fig4_cluster_count",
            Experiment::Fig5EtaSeparation => "fig5_eta_separation",
            Experiment::Fig6EtaDistance => "fig6_eta_distance",
            Experiment::Fig7RateDistance => "fig7_rate_distance",
            Experiment::Fig7bRateSnapshots => "fig7b_rate_snapshots",
            Experiment::Fig8SnrBound => "fig8_snr_bound",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id() == id)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One scalar outcome of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: &'static str,
    pub value: f64,
}

fn sample(sweep_name: &str, sweep_value: f64, metric: &'static str, value: f64) -> Sample {
    Sample { sweep_name: sweep_name.to_string(), sweep_value, metric, value }
}

/// Resolved arrays, dictionaries and link budget of a configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ExperimentConfig,
    pub budget: LinkBudget,
    pub sub6_rx: UlaGeometry<f64>,
    pub sub6_tx: UlaGeometry<f64>,
    pub rx: UlaGeometry<f64>,
    pub tx: UlaGeometry<f64>,
    pub codebook: PhaseCodebook<f64>,
    pub rx_dict: Dictionary<f64>,
    pub tx_dict: Dictionary<f64>,
    /// mmWave grids evaluated on the sub-6 GHz arrays.
    pub sub6_rx_dict: Dictionary<f64>,
    pub sub6_tx_dict: Dictionary<f64>,
}

/// Covariance estimates of one method on both link ends.
#[derive(Debug, Clone)]
pub struct LinkCovariances {
    pub rx: CovarianceMatrix<f64>,
    pub tx: CovarianceMatrix<f64>,
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig) -> Res<Self> {
        cfg.validate()?;
        let s = &cfg.system;
        let sub6_rx = UlaGeometry::new(s.sub6_rx_antennas, s.spacing)?;
        let sub6_tx = UlaGeometry::new(s.sub6_tx_antennas, s.spacing)?;
        let rx = UlaGeometry::new(s.rx_antennas, s.spacing)?;
        let tx = UlaGeometry::new(s.tx_antennas, s.spacing)?;
        let rx_dict = build_dictionary(&rx, cfg.estimation.oversampling)?;
        let tx_dict = build_dictionary(&tx, cfg.estimation.oversampling)?;
        Ok(Self {
            cfg: cfg.clone(),
            budget: LinkBudget::new(s),
            sub6_rx_dict: rx_dict.on_array(&sub6_rx),
            sub6_tx_dict: tx_dict.on_array(&sub6_tx),
            sub6_rx,
            sub6_tx,
            rx,
            tx,
            codebook: PhaseCodebook::new(s.phase_bits)?,
            rx_dict,
            tx_dict,
        })
    }

    pub fn translation_params(&self) -> TranslationParams {
        let e = &self.cfg.estimation;
        TranslationParams {
            num_snapshots: e.snapshots,
            pas: e.pas,
            as_threshold: e.as_threshold_deg.to_radians(),
            spread_scale: e.spread_scale,
        }
    }

    fn sub6_timing(&self) -> (usize, usize, f64) {
        let s = &self.cfg.system;
        (s.sub6_subcarriers, s.taps(s.sub6_subcarriers), 1.0 / s.sub6_bandwidth_hz)
    }

    fn mm_timing(&self) -> (usize, usize, f64) {
        let s = &self.cfg.system;
        (s.subcarriers, s.taps(s.subcarriers), 1.0 / s.bandwidth_hz)
    }

    fn pulse(&self, ts: f64) -> impl Fn(f64) -> f64 + Copy {
        let beta = self.cfg.system.rolloff;
        move |t| raised_cosine(t, beta, ts)
    }

    /// Congruent two-cluster scenario with means `first` and `second` degrees.
    pub fn pair_config(&self, first_deg: f64, second_deg: f64, distance_m: f64) -> ClusterGenConfig {
        let c = &self.cfg.channel;
        let s = &self.cfg.system;
        let spread = c.pair_spread_deg.to_radians();
        let band = |gain: f64| BandParams {
            num_clusters: 2,
            rays_per_cluster: c.pair_rays,
            aoa_spread: spread,
            aod_spread: spread,
            rms_delay: 0.0,
            power_decay: 1.0,
            path_gain: gain,
        };
        let fixed = |deg: f64, max_delay: f64| FixedCluster {
            aoa: deg.to_radians(),
            aod: deg.to_radians(),
            power: 0.5,
            max_delay,
        };
        ClusterGenConfig {
            mode: CongruenceMode::Congruent,
            sub6: band(self.budget.sub6_snr(s, distance_m)),
            mmwave: band(self.budget.mmwave_snr(s, distance_m)),
            angle_limit: c.angle_limit_deg.to_radians(),
            mean_perturbation: 0.0,
            fixed_clusters: vec![fixed(first_deg, 0.0), fixed(second_deg, c.pair_max_delay_ns * 1e-9)],
        }
    }

    /// Mismatched multi-cluster scenario of the rate experiments.
    pub fn realistic_config(&self, distance_m: f64) -> ClusterGenConfig {
        let c = &self.cfg.channel;
        let s = &self.cfg.system;
        ClusterGenConfig {
            mode: c.mode,
            sub6: BandParams {
                num_clusters: c.sub6_clusters,
                rays_per_cluster: c.rays_per_cluster,
                aoa_spread: c.sub6_spread_deg.to_radians(),
                aod_spread: c.sub6_spread_deg.to_radians(),
                rms_delay: c.sub6_rms_delay_ns * 1e-9,
                power_decay: c.sub6_power_decay,
                path_gain: self.budget.sub6_snr(s, distance_m),
            },
            mmwave: BandParams {
                num_clusters: c.clusters,
                rays_per_cluster: c.rays_per_cluster,
                aoa_spread: c.spread_deg.to_radians(),
                aod_spread: c.spread_deg.to_radians(),
                rms_delay: c.rms_delay_ns * 1e-9,
                power_decay: c.power_decay,
                path_gain: self.budget.mmwave_snr(s, distance_m),
            },
            angle_limit: c.angle_limit_deg.to_radians(),
            mean_perturbation: c.mean_perturbation_deg.to_radians(),
            fixed_clusters: Vec::new(),
        }
    }

    /// Equal-power Gaussian-PAS covariance of the pair scenario on the mmWave
    /// receive array.
    pub fn pair_truth(&self, means_deg: &[f64]) -> Res<CovarianceMatrix<f64>> {
        let spread = self.cfg.channel.pair_spread_deg.to_radians();
        let comps = means_deg
            .iter()
            .map(|m| theoretical_covariance(PasKind::TruncatedGaussian, m.to_radians(), spread, &self.rx))
            .collect::<oob_covariance::Result<Vec<_>>>()?;
        let p = 1.0 / comps.len() as f64;
        let weighted: Vec<(f64, &CovarianceMatrix<f64>)> = comps.iter().map(|c| (p, c)).collect();
        Ok(synthesize_multicluster(&weighted, None)?)
    }

    /// Expected receive and transmit covariances of a mmWave cluster set,
    /// averaged over ray gains and subcarriers.
    pub fn expected_covariances(&self, set: &ClusterSet<f64>) -> Res<LinkCovariances> {
        let (_, taps, ts) = self.mm_timing();
        let pulse = self.pulse(ts);
        let geo = set.ray_geometry(&self.rx, &self.tx);
        let mut weights = Vec::with_capacity(geo.num_rays());
        for (ci, cluster) in set.clusters.iter().enumerate() {
            let var = set.ray_gain_variance(ci);
            for _ in &cluster.rays {
                weights.push(var);
            }
        }
        let mut r_rx = CMat::zeros(self.rx.num_antennas, self.rx.num_antennas);
        let mut r_tx = CMat::zeros(self.tx.num_antennas, self.tx.num_antennas);
        for (r, (&var, &tau)) in weights.iter().zip(&geo.delays).enumerate() {
            let energy: f64 = (0..taps).map(|d| pulse(d as f64 * ts - tau).powi(2)).sum();
            let w = var * energy;
            let a = geo.a_rx.column(r);
            r_rx += a * a.adjoint() * Complex::new(w * self.rx.num_antennas as f64, 0.0);
            let b = geo.a_tx.column(r);
            r_tx += b * b.adjoint() * Complex::new(w * self.tx.num_antennas as f64, 0.0);
        }
        Ok(LinkCovariances { rx: CovarianceMatrix::new(r_rx, Side::Rx)?, tx: CovarianceMatrix::new(r_tx, Side::Tx)? })
    }

    /// Sample covariances of `snapshots` noisy wideband sub-6 GHz channel
    /// observations `H + N` with unit-variance noise.
    pub fn sub6_estimate<R: Rng + ?Sized>(&self, set: &ClusterSet<f64>, rng: &mut R) -> Res<LinkCovariances> {
        let (k_sub, taps, ts) = self.sub6_timing();
        let pulse = self.pulse(ts);
        let geo = set.ray_geometry(&self.sub6_rx, &self.sub6_tx);
        let responses: Vec<_> = (0..k_sub).map(|k| geo.subcarrier_response(k, k_sub, taps, ts, pulse)).collect();
        let (nr, nt) = (self.sub6_rx.num_antennas, self.sub6_tx.num_antennas);
        let t_count = self.cfg.estimation.snapshots;
        let mut local = set.clone();
        let mut mats = Vec::with_capacity(t_count * k_sub);
        for _ in 0..t_count {
            local.redraw_gains(rng);
            let gains = local.gains();
            for resp in &responses {
                let h = geo.matrix(&geo.effective_gains(&gains, resp));
                mats.push(h + complex_gaussian(nr, nt, rng));
            }
        }
        let fc = FreqChannel { subcarriers: mats };
        Ok(LinkCovariances { rx: rx_covariance(&fc)?, tx: tx_covariance(&fc)? })
    }

    /// `count` hybrid training snapshots on one link end. Each snapshot sees
    /// fresh ray gains on a random subcarrier.
    pub fn mm_snapshots<R: Rng + ?Sized>(
        &self,
        set: &ClusterSet<f64>,
        side: Side,
        count: usize,
        rng: &mut R,
    ) -> Res<SnapshotSet<f64>> {
        let (k_mm, taps, ts) = self.mm_timing();
        let pulse = self.pulse(ts);
        let geo = set.ray_geometry(&self.rx, &self.tx);
        let s = &self.cfg.system;
        let (n, m, omni) = match side {
            Side::Rx => (s.rx_antennas, s.rx_rf_chains, s.tx_antennas),
            Side::Tx => (s.tx_antennas, s.tx_rf_chains, s.rx_antennas),
        };
        let combiners: Vec<CMat<f64>> = (0..count).map(|_| random_combiner(n, m, &self.codebook, rng)).collect();
        let mut ch_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let mut local = set.clone();
        let mut current: Option<(usize, CVec<f64>)> = None;
        let channel = |t: usize, x: &CVec<f64>| {
            if current.as_ref().is_none_or(|(ct, _)| *ct != t) {
                local.redraw_gains(&mut ch_rng);
                let k = ch_rng.random_range(0..k_mm);
                let resp = geo.subcarrier_response(k, k_mm, taps, ts, pulse);
                current = Some((t, geo.effective_gains(&local.gains(), &resp)));
            }
            let eff = &current.as_ref().expect("filled above").1;
            match side {
                Side::Rx => geo.apply(eff, x),
                Side::Tx => geo.apply_adjoint(eff, x),
            }
        };
        Ok(collect_snapshots(channel, combiners, omni, 1.0, side, rng)?)
    }

    /// DCOMP (`prior = None`) or LW-DCOMP estimate of one link end.
    pub fn compressed_estimate(
        &self,
        snaps: &SnapshotSet<f64>,
        dict: &Dictionary<f64>,
        prior: Option<&[f64]>,
    ) -> Res<CovarianceMatrix<f64>> {
        let weights = match prior {
            None => PriorWeights::uniform(dict.size()),
            Some(rho) => {
                let j_w = self.cfg.estimation.j_w_factor * data_term_median(snaps, dict)?;
                PriorWeights::from_probabilities(rho.to_vec(), j_w)
            }
        };
        Ok(lw_dcomp(snaps, dict, 1.0, &weights)?.assembled)
    }

    /// Out-of-band prior on the mmWave grid of one link end.
    pub fn prior(&self, r_sub6: &CovarianceMatrix<f64>, side: Side, j_rho: f64) -> Res<Vec<f64>> {
        let dict = match side {
            Side::Rx => &self.sub6_rx_dict,
            Side::Tx => &self.sub6_tx_dict,
        };
        Ok(prob_proxy(r_sub6, dict, j_rho)?)
    }

    /// Fresh mmWave channel realization on every `rate_subcarrier_stride`-th
    /// subcarrier.
    pub fn eval_channel<R: Rng + ?Sized>(&self, set: &ClusterSet<f64>, rng: &mut R) -> FreqChannel<f64> {
        let (k_mm, taps, ts) = self.mm_timing();
        let pulse = self.pulse(ts);
        let geo = set.ray_geometry(&self.rx, &self.tx);
        let mut local = set.clone();
        local.redraw_gains(rng);
        let gains = local.gains();
        let subcarriers = (0..k_mm)
            .step_by(self.cfg.system.rate_subcarrier_stride)
            .map(|k| geo.matrix(&geo.effective_gains(&gains, &geo.subcarrier_response(k, k_mm, taps, ts, pulse))))
            .collect();
        FreqChannel { subcarriers }
    }

    /// Effective rate of hybrid precoders and combiners designed from `cov`.
    pub fn rate(&self, fc: &FreqChannel<f64>, cov: &LinkCovariances, train_blocks: usize) -> Res<f64> {
        let s = &self.cfg.system;
        let precoder = design_hybrid(&cov.tx, s.tx_rf_chains, s.streams, &self.codebook, 1)?;
        let combiner = design_hybrid(&cov.rx, s.rx_rf_chains, s.streams, &self.codebook, 1)?;
        let rc = RateConfig {
            total_power: s.subcarriers as f64,
            noise_var: 1.0,
            num_subcarriers: s.subcarriers,
            num_streams: s.streams,
            stat_blocks: s.stat_blocks,
            train_blocks: train_blocks.min(s.stat_blocks),
        };
        Ok(effective_rate(fc, &precoder, &combiner, &rc)?)
    }

    /// Training blocks of `t` snapshots: two blocks per omni snapshot on each
    /// of the two link ends.
    pub fn train_blocks(t: usize) -> usize {
        2 * 2 * t
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat<f64> {
    let sd = 0.5f64.sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        Complex::new(a * sd, b * sd)
    })
}

/// A seeding point of an experiment: trials at one point share the sweep
/// name and value in their seed hash.
#[derive(Debug, Clone)]
struct Point {
    name: String,
    value: f64,
}

struct Accumulator {
    keys: Vec<(String, u64, &'static str)>,
    stats: Vec<(String, f64, &'static str, Welford)>,
}

impl Accumulator {
    fn new() -> Self {
        Self { keys: Vec::new(), stats: Vec::new() }
    }

    fn push(&mut self, s: Sample) -> usize {
        let key = (s.sweep_name.clone(), s.sweep_value.to_bits(), s.metric);
        let idx = match self.keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                self.keys.push(key);
                self.stats.push((s.sweep_name, s.sweep_value, s.metric, Welford::new()));
                self.keys.len() - 1
            }
        };
        self.stats[idx].3.push(s.value);
        idx
    }
}

/// Runs `trials` seeded trials at every point (in parallel within a point,
/// aggregated in trial order) and returns one row per (sweep, metric).
fn run_points<F>(
    cfg: &ExperimentConfig,
    experiment: &str,
    points: &[Point],
    trials: usize,
    trial: F,
    sink: &mut dyn FnMut(&ResultRow),
) -> Res<Vec<ResultRow>>
where
    F: Fn(&Point, &mut ChaCha8Rng) -> Res<Vec<Sample>> + Sync,
{
    let master = cfg.run.seed;
    let mut acc = Accumulator::new();
    let mut rows = Vec::new();
    for p in points {
        let stream = format!("{experiment}/{}", p.name);
        let outs: Vec<Res<Vec<Sample>>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master, &stream, p.value, t));
                trial(p, &mut rng)
            })
            .collect();
        let mut touched: Vec<usize> = Vec::new();
        for out in outs {
            for s in out? {
                let i = acc.push(s);
                if !touched.contains(&i) {
                    touched.push(i);
                }
            }
        }
        for i in touched {
            let (name, value, metric, w) = &acc.stats[i];
            let row = ResultRow::from_stats(experiment, name, *value, metric, w, master);
            sink(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn points(name: &str, values: &[f64]) -> Vec<Point> {
    values.iter().map(|&value| Point { name: name.to_string(), value }).collect()
}

/// Outcome of one separation-sweep trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationTrial {
    pub point_sources: usize,
    pub clusters: usize,
    pub eta: f64,
}

/// Outcome of one distance-sweep trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceTrial {
    pub eta_translation: f64,
    pub eta_dcomp: f64,
    pub eta_lw_dcomp: f64,
}

impl Scenario {
    /// Two clusters at `first` and `first + separation` degrees, translated
    /// from the sub-6 GHz receive covariance.
    pub fn separation_trial<R: Rng + ?Sized>(&self, separation_deg: f64, rng: &mut R) -> Res<SeparationTrial> {
        let c = &self.cfg.channel;
        let first = c.pair_first_aoa_deg;
        let second = first + separation_deg;
        let gen = self.pair_config(first, second, c.separation_distance_m);
        let (sub6, _) = gen_cluster_sets::<f64, _>(&gen, rng)?;
        let est = self.sub6_estimate(&sub6, rng)?;
        let res = translate(&est.rx, &self.sub6_rx, &self.rx, &self.translation_params())?;
        let truth = self.pair_truth(&[first, second])?;
        Ok(SeparationTrial {
            point_sources: res.point_sources,
            clusters: res.estimates.len(),
            eta: efficiency(&truth, &res.mmwave_cov, self.cfg.system.streams)?,
        })
    }

    /// Two clusters at the configured pair angles and `distance_m`: receive
    /// efficiency of translation, DCOMP and LW-DCOMP for each `j_rho`.
    pub fn distance_trial_multi<R: Rng + ?Sized>(
        &self,
        distance_m: f64,
        j_rhos: &[f64],
        rng: &mut R,
    ) -> Res<(f64, f64, Vec<f64>)> {
        let c = &self.cfg.channel;
        let (first, second) = (c.pair_first_aoa_deg, c.pair_second_aoa_deg);
        let gen = self.pair_config(first, second, distance_m);
        let (sub6, mm) = gen_cluster_sets::<f64, _>(&gen, rng)?;
        let est = self.sub6_estimate(&sub6, rng)?;
        let truth = self.pair_truth(&[first, second])?;
        let ns = self.cfg.system.streams;
        let tr = translate(&est.rx, &self.sub6_rx, &self.rx, &self.translation_params())?;
        let eta_translation = efficiency(&truth, &tr.mmwave_cov, ns)?;
        let snaps = self.mm_snapshots(&mm, Side::Rx, self.cfg.estimation.snapshots, rng)?;
        let eta_dcomp = efficiency(&truth, &self.compressed_estimate(&snaps, &self.rx_dict, None)?, ns)?;
        let mut lw = Vec::with_capacity(j_rhos.len());
        for &j in j_rhos {
            let rho = self.prior(&est.rx, Side::Rx, j)?;
            lw.push(efficiency(&truth, &self.compressed_estimate(&snaps, &self.rx_dict, Some(&rho))?, ns)?);
        }
        Ok((eta_translation, eta_dcomp, lw))
    }

    pub fn distance_trial<R: Rng + ?Sized>(&self, distance_m: f64, rng: &mut R) -> Res<DistanceTrial> {
        let (eta_translation, eta_dcomp, lw) = self.distance_trial_multi(distance_m, &[self.cfg.estimation.j_rho], rng)?;
        Ok(DistanceTrial { eta_translation, eta_dcomp, eta_lw_dcomp: lw[0] })
    }

    fn realistic_draw<R: Rng + ?Sized>(
        &self,
        distance_m: f64,
        rng: &mut R,
    ) -> Res<(ClusterSet<f64>, LinkCovariances, LinkCovariances)> {
        let gen = self.realistic_config(distance_m);
        let (sub6, mm) = gen_cluster_sets::<f64, _>(&gen, rng)?;
        let sub6_est = self.sub6_estimate(&sub6, rng)?;
        let truth = self.expected_covariances(&mm)?;
        Ok((mm, sub6_est, truth))
    }

    fn compressed_pair(
        &self,
        rx: &SnapshotSet<f64>,
        tx: &SnapshotSet<f64>,
        priors: Option<(&[f64], &[f64])>,
    ) -> Res<LinkCovariances> {
        Ok(LinkCovariances {
            rx: self.compressed_estimate(rx, &self.rx_dict, priors.map(|p| p.0))?,
            tx: self.compressed_estimate(tx, &self.tx_dict, priors.map(|p| p.1))?,
        })
    }

    /// Rates of translation, DCOMP, LW-DCOMP and the true covariance at one
    /// distance.
    pub fn rate_trial<R: Rng + ?Sized>(&self, distance_m: f64, rng: &mut R) -> Res<[f64; 4]> {
        let (mm, sub6, truth) = self.realistic_draw(distance_m, rng)?;
        let params = self.translation_params();
        let translated = LinkCovariances {
            rx: translate(&sub6.rx, &self.sub6_rx, &self.rx, &params)?.mmwave_cov,
            tx: translate(&sub6.tx, &self.sub6_tx, &self.tx, &params)?.mmwave_cov,
        };
        let t = self.cfg.estimation.snapshots;
        let snaps_rx = self.mm_snapshots(&mm, Side::Rx, t, rng)?;
        let snaps_tx = self.mm_snapshots(&mm, Side::Tx, t, rng)?;
        let j_rho = self.cfg.estimation.j_rho;
        let rho_rx = self.prior(&sub6.rx, Side::Rx, j_rho)?;
        let rho_tx = self.prior(&sub6.tx, Side::Tx, j_rho)?;
        let dcomp = self.compressed_pair(&snaps_rx, &snaps_tx, None)?;
        let lw = self.compressed_pair(&snaps_rx, &snaps_tx, Some((&rho_rx, &rho_tx)))?;
        let fc = self.eval_channel(&mm, rng);
        let train = Self::train_blocks(t);
        Ok([
            self.rate(&fc, &translated, 0)?,
            self.rate(&fc, &dcomp, train)?,
            self.rate(&fc, &lw, train)?,
            self.rate(&fc, &truth, 0)?,
        ])
    }

    /// Rates of DCOMP and LW-DCOMP for every snapshot count of the sweep,
    /// using nested prefixes of one snapshot sequence.
    pub fn snapshot_trial<R: Rng + ?Sized>(&self, distance_m: f64, rng: &mut R) -> Res<Vec<(usize, f64, f64)>> {
        let (mm, sub6, _) = self.realistic_draw(distance_m, rng)?;
        let sweep = &self.cfg.estimation.snapshot_sweep;
        let t_max = sweep.iter().copied().max().unwrap_or(1);
        let all_rx = self.mm_snapshots(&mm, Side::Rx, t_max, rng)?;
        let all_tx = self.mm_snapshots(&mm, Side::Tx, t_max, rng)?;
        let j_rho = self.cfg.estimation.j_rho;
        let rho_rx = self.prior(&sub6.rx, Side::Rx, j_rho)?;
        let rho_tx = self.prior(&sub6.tx, Side::Tx, j_rho)?;
        let fc = self.eval_channel(&mm, rng);
        let mut out = Vec::with_capacity(sweep.len());
        for &t in sweep {
            let (srx, stx) = (all_rx.truncated(t), all_tx.truncated(t));
            let train = Self::train_blocks(t);
            let dcomp = self.rate(&fc, &self.compressed_pair(&srx, &stx, None)?, train)?;
            let lw = self.rate(&fc, &self.compressed_pair(&srx, &stx, Some((&rho_rx, &rho_tx)))?, train)?;
            out.push((t, dcomp, lw));
        }
        Ok(out)
    }
}

/// Outcome of one single-path SNR-loss trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrLossTrial {
    pub gamma_digital: f64,
    pub gamma_hybrid: f64,
    pub gamma_approx: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Random single-path link with `n` antennas per side and a Hermitian
/// Gaussian perturbation of per-entry variance `1 / SNR_k`.
pub fn snr_loss_trial<R: Rng + ?Sized>(
    n: usize,
    snr_db: f64,
    sigma_alpha_sq: f64,
    angle_limit_deg: f64,
    codebook: &PhaseCodebook<f64>,
    rng: &mut R,
) -> Res<SnrLossTrial> {
    let limit = angle_limit_deg.to_radians();
    let geom = UlaGeometry::new(n, 0.5)?;
    let link = SinglePathLink {
        rx: geom,
        tx: geom,
        aoa: rng.random_range(-limit..limit),
        aod: rng.random_range(-limit..limit),
        sigma_alpha_sq,
    };
    let pert = Perturbation::gaussian(n, n, 1.0 / db_to_linear(snr_db), rng);
    let rf = ((n as f64).sqrt().round() as usize).max(1);
    let gamma_digital = expected_snr_loss(&link, &beam_pair(&link, &pert, &SnrMode::Digital)?)?;
    let hybrid = SnrMode::Hybrid { rf_rx: rf, rf_tx: rf, codebook: codebook.clone() };
    let gamma_hybrid = expected_snr_loss(&link, &beam_pair(&link, &pert, &hybrid)?)?;
    let (u_rx, u_tx) = link.steering();
    let gamma_approx = snr_loss_approx(&pert, &u_rx, &u_tx, sigma_alpha_sq, n, n);
    let (lower, upper) = snr_loss_bounds(&pert, sigma_alpha_sq, n, n);
    Ok(SnrLossTrial { gamma_digital, gamma_hybrid, gamma_approx, lower, upper })
}

/// Monte-Carlo SNR ratio of first-order perturbed beams for a perturbation
/// made orthogonal to the signal direction, next to the closed form.
pub fn first_order_loss_check(n: usize, snr_db: f64, sigma_alpha_sq: f64, mc_trials: usize, seed: u64) -> Res<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = UlaGeometry::new(n, 0.5)?;
    let link = SinglePathLink {
        rx: geom,
        tx: geom,
        aoa: rng.random_range(-1.0..1.0),
        aod: rng.random_range(-1.0..1.0),
        sigma_alpha_sq,
    };
    let (u_rx, u_tx) = link.steering();
    let pert = Perturbation::gaussian(n, n, 1.0 / db_to_linear(snr_db), &mut rng).orthogonalized(&u_rx, &u_tx);
    let est = monte_carlo_snr(&link, &pert, &SnrMode::FirstOrder, 1.0, 1.0, mc_trials, &mut rng)?;
    Ok((est.gamma, snr_loss_approx(&pert, &u_rx, &u_tx, sigma_alpha_sq, n, n)))
}

/// Runs one experiment. Rows are passed to `sink` as each sweep point
/// completes and also returned.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    sink: &mut dyn FnMut(&ResultRow),
) -> Res<Vec<ResultRow>> {
    let sc = Scenario::new(cfg)?;
    let id = experiment.id();
    let trials = cfg.run.trials;
    match experiment {
        Experiment::Fig4ClusterCount | Experiment::Fig5EtaSeparation => {
            let pts = points("separation_deg", &cfg.channel.separations_deg);
            let count = experiment == Experiment::Fig4ClusterCount;
            run_points(cfg, id, &pts, trials, |p, rng| {
                let t = sc.separation_trial(p.value, rng)?;
                Ok(if count {
                    vec![
                        sample(&p.name, p.value, "num_clusters", t.clusters as f64),
                        sample(&p.name, p.value, "mdl_point_sources", t.point_sources as f64),
                    ]
                } else {
                    vec![sample(&p.name, p.value, "eta_translation", t.eta)]
                })
            }, sink)
        }
        Experiment::Fig6EtaDistance => {
            let pts = points("distance_m", &cfg.channel.distances_m);
            run_points(cfg, id, &pts, trials, |p, rng| {
                let t = sc.distance_trial(p.value, rng)?;
                Ok(vec![
                    sample(&p.name, p.value, "eta_translation", t.eta_translation),
                    sample(&p.name, p.value, "eta_dcomp", t.eta_dcomp),
                    sample(&p.name, p.value, "eta_lw_dcomp", t.eta_lw_dcomp),
                    sample(&p.name, p.value, "eta_gain", t.eta_lw_dcomp - t.eta_dcomp),
                ])
            }, sink)
        }
        Experiment::Fig7RateDistance => {
            let pts = points("distance_m", &cfg.channel.rate_distances_m);
            run_points(cfg, id, &pts, trials, |p, rng| {
                let r = sc.rate_trial(p.value, rng)?;
                Ok(vec![
                    sample(&p.name, p.value, "rate_translation", r[0]),
                    sample(&p.name, p.value, "rate_dcomp", r[1]),
                    sample(&p.name, p.value, "rate_lw_dcomp", r[2]),
                    sample(&p.name, p.value, "rate_true_cov", r[3]),
                ])
            }, sink)
        }
        Experiment::Fig7bRateSnapshots => {
            let pts = points("distance_m", &[cfg.channel.snapshot_distance_m]);
            run_points(cfg, id, &pts, trials, |p, rng| {
                let mut out = Vec::new();
                for (t, dcomp, lw) in sc.snapshot_trial(p.value, rng)? {
                    out.push(sample("snapshots", t as f64, "rate_dcomp", dcomp));
                    out.push(sample("snapshots", t as f64, "rate_lw_dcomp", lw));
                }
                Ok(out)
            }, sink)
        }
        Experiment::Fig8SnrBound => {
            let a = &cfg.analysis;
            let mut rows = Vec::new();
            for &n in &a.antennas {
                let pts = points(&format!("snr_db_n{n}"), &a.snr_db);
                rows.extend(run_points(cfg, id, &pts, trials, |p, rng| {
                    let t = snr_loss_trial(n, p.value, a.sigma_alpha_sq, a.angle_limit_deg, &sc.codebook, rng)?;
                    Ok(vec![
                        sample(&p.name, p.value, "gamma_digital", t.gamma_digital),
                        sample(&p.name, p.value, "gamma_hybrid", t.gamma_hybrid),
                        sample(&p.name, p.value, "gamma_approx", t.gamma_approx),
                        sample(&p.name, p.value, "bound_lower", t.lower),
                        sample(&p.name, p.value, "bound_upper", t.upper),
                        sample(&p.name, p.value, "digital_within_upper", f64::from(u8::from(t.gamma_digital <= t.upper))),
                        sample(&p.name, p.value, "hybrid_within_upper", f64::from(u8::from(t.gamma_hybrid <= t.upper))),
                    ])
                }, sink)?);
            }
            Ok(rows)
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, experiment: Experiment) -> Res<Vec<ResultRow>> {
    run_experiment_with(cfg, experiment, &mut |_| {})
}

/// Mean LW-DCOMP efficiency of every `J_rho` candidate in the distance
/// scenario at the farthest configured distance, with common random numbers
/// across candidates. Returns the best candidate (ties to the smallest) and
/// one row per candidate.
pub fn sweep_j_rho(cfg: &ExperimentConfig, candidates: &[f64]) -> Res<(f64, Vec<ResultRow>)> {
    if candidates.is_empty() {
        return Err(HarnessError::Config { path: "candidates".into(), message: "need at least one J_rho value".into() });
    }
    for (i, &c) in candidates.iter().enumerate() {
        if !(c > 0.0 && c <= 1.0) {
            return Err(HarnessError::Config { path: format!("candidates[{i}]"), message: "must lie in (0, 1]".into() });
        }
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let sc = Scenario::new(cfg)?;
    let distance = cfg.channel.distances_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pts = points("distance_m", &[distance]);
    let rows = run_points(cfg, "sweep_j_rho", &pts, cfg.run.trials, |_, rng| {
        let (_, _, lw) = sc.distance_trial_multi(distance, &sorted, rng)?;
        Ok(sorted.iter().zip(lw).map(|(&j, eta)| sample("j_rho", j, "eta_lw_dcomp", eta)).collect())
    }, &mut |_| {})?;
    let mut best = (sorted[0], f64::NEG_INFINITY);
    for &j in &sorted {
        let mean = rows.iter().find(|r| r.sweep_value == j).map_or(f64::NEG_INFINITY, |r| r.mean);
        if mean > best.1 {
            best = (j, mean);
        }
    }
    Ok((best.0, rows))
}
