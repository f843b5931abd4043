//! Experiment configuration: defaults, TOML loading, dotted-path overrides
//! and validation.

use std::path::Path;

use oob_covariance::channel::CongruenceMode;
use oob_covariance::PasKind;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub sub6_rx_antennas: usize,
    pub sub6_tx_antennas: usize,
    pub rx_antennas: usize,
    pub tx_antennas: usize,
    pub rx_rf_chains: usize,
    pub tx_rf_chains: usize,
    pub streams: usize,
    pub sub6_subcarriers: usize,
    pub subcarriers: usize,
    pub cp_fraction: f64,
    pub sub6_carrier_hz: f64,
    pub carrier_hz: f64,
    pub sub6_bandwidth_hz: f64,
    pub bandwidth_hz: f64,
    /// Sub-6 GHz transmit power per `sub6_power_ref_bandwidth_hz`.
    pub sub6_power_dbm: f64,
    pub sub6_power_ref_bandwidth_hz: f64,
    pub power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub path_loss_exponent: f64,
    pub spacing: f64,
    pub phase_bits: u32,
    pub rolloff: f64,
    pub stat_blocks: usize,
    /// Rates are averaged over every `rate_subcarrier_stride`-th subcarrier.
    pub rate_subcarrier_stride: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            sub6_rx_antennas: 8,
            sub6_tx_antennas: 4,
            rx_antennas: 64,
            tx_antennas: 32,
            rx_rf_chains: 16,
            tx_rf_chains: 8,
            streams: 4,
            sub6_subcarriers: 32,
            subcarriers: 128,
            cp_fraction: 0.25,
            sub6_carrier_hz: 3.5e9,
            carrier_hz: 28e9,
            sub6_bandwidth_hz: 150e6,
            bandwidth_hz: 850e6,
            sub6_power_dbm: 30.0,
            sub6_power_ref_bandwidth_hz: 25e6,
            power_dbm: 43.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 0.0,
            path_loss_exponent: 3.0,
            spacing: 0.5,
            phase_bits: 2,
            rolloff: 1.0,
            stat_blocks: 2048,
            rate_subcarrier_stride: 8,
        }
    }
}

impl SystemConfig {
    /// Delay taps: one more than the cyclic-prefix length.
    pub fn taps(&self, subcarriers: usize) -> usize {
        (self.cp_fraction * subcarriers as f64).round() as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Two-cluster scenario of the separation and distance sweeps.
    pub pair_rays: usize,
    pub pair_spread_deg: f64,
    pub pair_first_aoa_deg: f64,
    pub pair_second_aoa_deg: f64,
    pub pair_max_delay_ns: f64,
    /// Offsets of the second cluster from `pair_first_aoa_deg`.
    pub separations_deg: Vec<f64>,
    pub separation_distance_m: f64,
    pub distances_m: Vec<f64>,
    /// Realistic mismatched scenario of the rate experiments.
    pub mode: CongruenceMode,
    pub sub6_clusters: usize,
    pub clusters: usize,
    pub rays_per_cluster: usize,
    pub sub6_spread_deg: f64,
    pub spread_deg: f64,
    pub sub6_rms_delay_ns: f64,
    pub rms_delay_ns: f64,
    pub sub6_power_decay: f64,
    pub power_decay: f64,
    pub angle_limit_deg: f64,
    pub mean_perturbation_deg: f64,
    pub rate_distances_m: Vec<f64>,
    pub snapshot_distance_m: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            pair_rays: 100,
            pair_spread_deg: 3.0,
            pair_first_aoa_deg: 5.0,
            pair_second_aoa_deg: 45.0,
            pair_max_delay_ns: 10.0,
            separations_deg: (5..=20).map(f64::from).collect(),
            separation_distance_m: 90.0,
            distances_m: vec![30.0, 45.0, 60.0, 75.0, 90.0, 105.0, 120.0],
            mode: CongruenceMode::Realistic,
            sub6_clusters: 10,
            clusters: 5,
            rays_per_cluster: 20,
            sub6_spread_deg: 4.0,
            spread_deg: 2.0,
            sub6_rms_delay_ns: 3.8,
            rms_delay_ns: 2.7,
            sub6_power_decay: 0.2,
            power_decay: 0.1,
            angle_limit_deg: 60.0,
            mean_perturbation_deg: 1.0,
            rate_distances_m: vec![30.0, 45.0, 60.0, 75.0, 90.0, 105.0, 120.0],
            snapshot_distance_m: 70.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    pub snapshots: usize,
    pub snapshot_sweep: Vec<usize>,
    pub oversampling: usize,
    pub j_rho: f64,
    pub j_w_factor: f64,
    pub as_threshold_deg: f64,
    pub spread_scale: f64,
    pub pas: PasKind,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            snapshots: 30,
            snapshot_sweep: vec![4, 8, 12, 16, 20, 24, 32, 40, 48, 56, 64],
            oversampling: 2,
            j_rho: 0.9,
            j_w_factor: 0.1,
            as_threshold_deg: 15.0,
            spread_scale: 1.0,
            pas: PasKind::TruncatedGaussian,
        }
    }
}

/// Settings of the SNR-loss study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub antennas: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub sigma_alpha_sq: f64,
    pub angle_limit_deg: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            antennas: vec![16, 64],
            snr_db: (0..=10).map(|i| f64::from(2 * i)).collect(),
            sigma_alpha_sq: 1.0,
            angle_limit_deg: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub trials: usize,
    pub seed: u64,
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 1, output: "results.csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub channel: ChannelConfig,
    pub estimation: EstimationConfig,
    pub analysis: AnalysisConfig,
    pub run: RunConfig,
}

fn cfg_err(path: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config { path: path.to_string(), message: message.into() }
}

fn lookup_mut<'a>(root: &'a mut toml::Value, path: &str) -> Option<&'a mut toml::Value> {
    let mut cur = root;
    for key in path.split('.') {
        cur = cur.as_table_mut()?.get_mut(key)?;
    }
    Some(cur)
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn same_kind(a: &toml::Value, b: &toml::Value) -> bool {
    use toml::Value::*;
    matches!(
        (a, b),
        (String(_), String(_))
            | (Integer(_), Integer(_))
            | (Float(_), Float(_) | Integer(_))
            | (Boolean(_), Boolean(_))
            | (Array(_), Array(_))
            | (Table(_), Table(_))
            | (Datetime(_), Datetime(_))
    )
}

fn coerce(template: &toml::Value, v: toml::Value) -> toml::Value {
    match (template, v) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (toml::Value::Array(t), toml::Value::Array(items)) => match t.first() {
            Some(first) => toml::Value::Array(items.into_iter().map(|x| coerce(first, x)).collect()),
            None => toml::Value::Array(items),
        },
        (_, v) => v,
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Table, prefix: &str) -> Result<(), HarnessError> {
    for (key, value) in overlay {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        let Some(slot) = base.as_table_mut().and_then(|t| t.get_mut(&key)) else {
            return Err(cfg_err(&path, "unknown field"));
        };
        match value {
            toml::Value::Table(sub) if slot.is_table() => merge(slot, sub, &path)?,
            v => set_checked(slot, v, &path)?,
        }
    }
    Ok(())
}

fn set_checked(slot: &mut toml::Value, v: toml::Value, path: &str) -> Result<(), HarnessError> {
    let v = coerce(slot, v);
    if !same_kind(slot, &v) {
        return Err(cfg_err(path, format!("expected a {}, got `{v}`", slot.type_str())));
    }
    *slot = v;
    Ok(())
}

impl ExperimentConfig {
    /// Defaults, then the optional TOML file, then `path=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = match file {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| cfg_err("<file>", format!("{}: {e}", p.display())))?),
            None => None,
        };
        Self::from_parts(text.as_deref(), overrides)
    }

    pub fn from_parts(toml_text: Option<&str>, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut value = toml::Value::try_from(Self::default()).map_err(|e| cfg_err("<defaults>", e.to_string()))?;
        if let Some(text) = toml_text {
            let table: toml::Table = toml::from_str(text).map_err(|e| cfg_err("<file>", e.to_string()))?;
            merge(&mut value, table, "")?;
        }
        for ov in overrides {
            let (path, raw) = ov
                .split_once('=')
                .ok_or_else(|| cfg_err(ov, "override must look like `block.field=value`"))?;
            let path = path.trim();
            let slot = lookup_mut(&mut value, path).ok_or_else(|| cfg_err(path, "unknown field"))?;
            set_checked(slot, parse_override_value(raw.trim()), path)?;
        }
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| cfg_err("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let s = &self.system;
        let positive = |path: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(path, format!("must be positive and finite, got {v}")))
            }
        };
        let non_negative = |path: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(path, format!("must be non-negative and finite, got {v}")))
            }
        };
        let at_least = |path: &str, v: usize, min: usize| {
            if v >= min {
                Ok(())
            } else {
                Err(cfg_err(path, format!("must be at least {min}, got {v}")))
            }
        };

        at_least("system.sub6_rx_antennas", s.sub6_rx_antennas, 2)?;
        at_least("system.sub6_tx_antennas", s.sub6_tx_antennas, 2)?;
        at_least("system.rx_antennas", s.rx_antennas, 2)?;
        at_least("system.tx_antennas", s.tx_antennas, 2)?;
        at_least("system.streams", s.streams, 1)?;
        if s.rx_rf_chains < s.streams || s.rx_rf_chains > s.rx_antennas {
            return Err(cfg_err("system.rx_rf_chains", "must lie between streams and rx_antennas"));
        }
        if s.tx_rf_chains < s.streams || s.tx_rf_chains > s.tx_antennas {
            return Err(cfg_err("system.tx_rf_chains", "must lie between streams and tx_antennas"));
        }
        at_least("system.sub6_subcarriers", s.sub6_subcarriers, 1)?;
        at_least("system.subcarriers", s.subcarriers, 1)?;
        if !(s.cp_fraction >= 0.0 && s.cp_fraction < 1.0) {
            return Err(cfg_err("system.cp_fraction", "must lie in [0, 1)"));
        }
        positive("system.sub6_carrier_hz", s.sub6_carrier_hz)?;
        positive("system.carrier_hz", s.carrier_hz)?;
        positive("system.sub6_bandwidth_hz", s.sub6_bandwidth_hz)?;
        positive("system.bandwidth_hz", s.bandwidth_hz)?;
        positive("system.sub6_power_ref_bandwidth_hz", s.sub6_power_ref_bandwidth_hz)?;
        for (path, v) in [
            ("system.sub6_power_dbm", s.sub6_power_dbm),
            ("system.power_dbm", s.power_dbm),
            ("system.noise_psd_dbm_hz", s.noise_psd_dbm_hz),
            ("system.noise_figure_db", s.noise_figure_db),
        ] {
            if !v.is_finite() {
                return Err(cfg_err(path, "must be finite"));
            }
        }
        positive("system.path_loss_exponent", s.path_loss_exponent)?;
        positive("system.spacing", s.spacing)?;
        if s.phase_bits == 0 || s.phase_bits > 16 {
            return Err(cfg_err("system.phase_bits", "must lie in 1..=16"));
        }
        if !(s.rolloff > 0.0 && s.rolloff <= 1.0) {
            return Err(cfg_err("system.rolloff", "must lie in (0, 1]"));
        }
        at_least("system.stat_blocks", s.stat_blocks, 1)?;
        if s.rate_subcarrier_stride == 0 || s.rate_subcarrier_stride > s.subcarriers {
            return Err(cfg_err("system.rate_subcarrier_stride", "must lie in 1..=subcarriers"));
        }

        let c = &self.channel;
        at_least("channel.pair_rays", c.pair_rays, 1)?;
        non_negative("channel.pair_spread_deg", c.pair_spread_deg)?;
        non_negative("channel.pair_max_delay_ns", c.pair_max_delay_ns)?;
        for (path, v) in [("channel.pair_first_aoa_deg", c.pair_first_aoa_deg), ("channel.pair_second_aoa_deg", c.pair_second_aoa_deg)] {
            if !(v.abs() < 90.0) {
                return Err(cfg_err(path, "must lie strictly inside (-90, 90)"));
            }
        }
        if c.separations_deg.is_empty() {
            return Err(cfg_err("channel.separations_deg", "must not be empty"));
        }
        for (i, &v) in c.separations_deg.iter().enumerate() {
            if !(v >= 0.0 && (c.pair_first_aoa_deg + v).abs() < 90.0) {
                return Err(cfg_err(&format!("channel.separations_deg[{i}]"), "second cluster must stay inside (-90, 90)"));
            }
        }
        positive("channel.separation_distance_m", c.separation_distance_m)?;
        for (name, list) in [("channel.distances_m", &c.distances_m), ("channel.rate_distances_m", &c.rate_distances_m)] {
            if list.is_empty() {
                return Err(cfg_err(name, "must not be empty"));
            }
            for (i, &d) in list.iter().enumerate() {
                positive(&format!("{name}[{i}]"), d)?;
            }
        }
        positive("channel.snapshot_distance_m", c.snapshot_distance_m)?;
        at_least("channel.sub6_clusters", c.sub6_clusters, 1)?;
        at_least("channel.clusters", c.clusters, 1)?;
        if c.mode == CongruenceMode::Realistic && c.clusters > c.sub6_clusters {
            return Err(cfg_err("channel.clusters", "realistic mode needs clusters <= sub6_clusters"));
        }
        at_least("channel.rays_per_cluster", c.rays_per_cluster, 1)?;
        non_negative("channel.sub6_spread_deg", c.sub6_spread_deg)?;
        non_negative("channel.spread_deg", c.spread_deg)?;
        non_negative("channel.sub6_rms_delay_ns", c.sub6_rms_delay_ns)?;
        non_negative("channel.rms_delay_ns", c.rms_delay_ns)?;
        positive("channel.sub6_power_decay", c.sub6_power_decay)?;
        positive("channel.power_decay", c.power_decay)?;
        if !(c.angle_limit_deg > 0.0 && c.angle_limit_deg < 90.0) {
            return Err(cfg_err("channel.angle_limit_deg", "must lie in (0, 90)"));
        }
        non_negative("channel.mean_perturbation_deg", c.mean_perturbation_deg)?;

        let e = &self.estimation;
        at_least("estimation.snapshots", e.snapshots, 1)?;
        if e.snapshot_sweep.is_empty() {
            return Err(cfg_err("estimation.snapshot_sweep", "must not be empty"));
        }
        for (i, &t) in e.snapshot_sweep.iter().enumerate() {
            at_least(&format!("estimation.snapshot_sweep[{i}]"), t, 1)?;
        }
        at_least("estimation.oversampling", e.oversampling, 1)?;
        if !(e.j_rho > 0.0 && e.j_rho <= 1.0) {
            return Err(cfg_err("estimation.j_rho", "must lie in (0, 1]"));
        }
        non_negative("estimation.j_w_factor", e.j_w_factor)?;
        positive("estimation.as_threshold_deg", e.as_threshold_deg)?;
        positive("estimation.spread_scale", e.spread_scale)?;

        let a = &self.analysis;
        if a.antennas.is_empty() {
            return Err(cfg_err("analysis.antennas", "must not be empty"));
        }
        for (i, &n) in a.antennas.iter().enumerate() {
            at_least(&format!("analysis.antennas[{i}]"), n, 2)?;
        }
        if a.snr_db.is_empty() {
            return Err(cfg_err("analysis.snr_db", "must not be empty"));
        }
        for (i, &v) in a.snr_db.iter().enumerate() {
            if !v.is_finite() {
                return Err(cfg_err(&format!("analysis.snr_db[{i}]"), "must be finite"));
            }
        }
        positive("analysis.sigma_alpha_sq", a.sigma_alpha_sq)?;
        if !(a.angle_limit_deg > 0.0 && a.angle_limit_deg < 90.0) {
            return Err(cfg_err("analysis.angle_limit_deg", "must lie in (0, 90)"));
        }

        at_least("run.trials", self.run.trials, 1)?;
        if self.run.output.trim().is_empty() {
            return Err(cfg_err("run.output", "must not be empty"));
        }
        Ok(())
    }
}
