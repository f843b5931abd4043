//! Link budget shared by the experiments.

use oob_covariance::channel::path_gain;
use serde::Serialize;

use crate::config::SystemConfig;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Thermal noise power over `bandwidth_hz`.
pub fn noise_power(bandwidth_hz: f64, psd_dbm_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(psd_dbm_hz + noise_figure_db) * bandwidth_hz
}

/// Constants behind the per-band SNR figures, recorded in the sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
    pub sub6_total_power_w: f64,
    pub power_w: f64,
    pub sub6_noise_power_w: f64,
    pub noise_power_w: f64,
}

impl LinkBudget {
    pub fn new(s: &SystemConfig) -> Self {
        let sub6_total_dbm = s.sub6_power_dbm + 10.0 * (s.sub6_bandwidth_hz / s.sub6_power_ref_bandwidth_hz).log10();
        Self {
            noise_psd_dbm_hz: s.noise_psd_dbm_hz,
            noise_figure_db: s.noise_figure_db,
            path_loss_exponent: s.path_loss_exponent,
            reference_distance_m: 1.0,
            sub6_total_power_w: dbm_to_watts(sub6_total_dbm),
            power_w: dbm_to_watts(s.power_dbm),
            sub6_noise_power_w: noise_power(s.sub6_bandwidth_hz, s.noise_psd_dbm_hz, s.noise_figure_db),
            noise_power_w: noise_power(s.bandwidth_hz, s.noise_psd_dbm_hz, s.noise_figure_db),
        }
    }

    /// Per-subcarrier SNR `P g(d) / (N0 B)` of the sub-6 GHz link, before
    /// array gain.
    pub fn sub6_snr(&self, s: &SystemConfig, distance_m: f64) -> f64 {
        path_gain(s.sub6_carrier_hz, distance_m, self.path_loss_exponent) * self.sub6_total_power_w / self.sub6_noise_power_w
    }

    /// Per-subcarrier SNR of the mmWave link, before array gain.
    pub fn mmwave_snr(&self, s: &SystemConfig, distance_m: f64) -> f64 {
        path_gain(s.carrier_hz, distance_m, self.path_loss_exponent) * self.power_w / self.noise_power_w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-9);
        let n = noise_power(1.0, -174.0, 0.0);
        assert!((10.0 * (n * 1e3).log10() + 174.0).abs() < 1e-9);
    }

    #[test]
    fn snr_falls_with_distance_exponent() {
        let s = SystemConfig::default();
        let lb = LinkBudget::new(&s);
        let ratio = lb.mmwave_snr(&s, 50.0) / lb.mmwave_snr(&s, 100.0);
        assert!((ratio - 8.0).abs() < 1e-9);
        let db = 10.0 * lb.mmwave_snr(&s, 90.0).log10();
        assert!(db > 0.0 && db < 20.0, "{db}");
        assert!(lb.sub6_snr(&s, 90.0) > lb.mmwave_snr(&s, 90.0));
    }
}
