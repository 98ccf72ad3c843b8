//! System-level constants shared by every stage of the simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Antenna, RF-chain, propagation, and power-consumption parameters.
///
/// Powers are in watts, energies per conversion step in joules (ADC) or
/// watts per step (switching), distances in meters, and gains in dB where
/// the field name says so.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Number of base-station antennas.
    pub n_r: usize,
    /// Number of RF chains, each feeding one I/Q ADC pair.
    pub n_rf: usize,
    /// Number of single-antenna users.
    pub n_u: usize,
    /// Propagation paths per user.
    pub l: usize,
    /// Per-user transmit power in dBm.
    pub p_u_dbm: f64,
    pub bandwidth_hz: f64,
    pub sampling_rate_hz: f64,
    pub noise_figure_db: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub alpha_pl: f64,
    pub beta_pl: f64,
    /// Standard deviation of the log-normal shadowing, in dB.
    pub sigma_sh_db: f64,
    pub p_lna: f64,
    pub p_ps: f64,
    pub p_rf_chain: f64,
    pub p_bb: f64,
    /// Walden figure of merit, joules per conversion step.
    pub adc_fom: f64,
    /// Switching cost per conversion step when resolution increases.
    pub c_sw_up: f64,
    /// Switching cost per conversion step when resolution decreases.
    pub c_sw_down: f64,
    /// Maximum ADC resolution; also the "infinite resolution" reference.
    pub b_cap: u32,
    pub seed: u64,
}

impl Default for SystemConfig {
    /// The full-scale 28 GHz scenario: 256 antennas, 128 RF chains,
    /// 10 users with 13 paths each.
    fn default() -> Self {
        Self {
            n_r: 256,
            n_rf: 128,
            n_u: 10,
            l: 13,
            p_u_dbm: 20.0,
            bandwidth_hz: 1e9,
            sampling_rate_hz: 1e9,
            noise_figure_db: 5.0,
            cell_radius_m: 200.0,
            min_distance_m: 30.0,
            alpha_pl: 72.0,
            beta_pl: 2.92,
            sigma_sh_db: 8.7,
            p_lna: 20e-3,
            p_ps: 10e-3,
            p_rf_chain: 40e-3,
            p_bb: 200e-3,
            adc_fom: 494e-15,
            c_sw_up: 3.47e-3,
            c_sw_down: 0.94e-3,
            b_cap: 12,
            seed: 1,
        }
    }
}

impl SystemConfig {
    /// Reduced scenario (64 antennas, 32 RF chains, 4 users, 8 paths) that
    /// keeps every other constant at its full-scale value.
    pub fn desk() -> Self {
        Self {
            n_r: 64,
            n_rf: 32,
            n_u: 4,
            l: 8,
            ..Self::default()
        }
    }

    /// Linear transmit power on the same reference as the dBm noise floor,
    /// so that `transmit_power() * gamma` is the per-path SNR.
    pub fn transmit_power(&self) -> f64 {
        10f64.powf(self.p_u_dbm / 10.0)
    }

    /// Power drawn by one activated RF chain: its phase shifters plus the chain itself.
    pub fn chain_power(&self) -> f64 {
        self.n_r as f64 * self.p_ps + self.p_rf_chain
    }

    /// `c * f_s`, the ADC power per conversion step.
    pub fn adc_step_power(&self) -> f64 {
        self.adc_fom * self.sampling_rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.n_r == 0 || self.n_rf == 0 || self.n_u == 0 || self.l == 0 {
            return bad("antenna, RF-chain, user and path counts must be positive");
        }
        if self.n_rf > self.n_r {
            return bad("n_rf must not exceed n_r");
        }
        if self.l > self.n_r {
            return bad("l must not exceed n_r");
        }
        let powers = [
            self.p_lna,
            self.p_ps,
            self.p_rf_chain,
            self.p_bb,
            self.adc_fom,
            self.c_sw_up,
            self.c_sw_down,
        ];
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return bad("power constants must be finite and non-negative");
        }
        if !(self.min_distance_m > 0.0 && self.min_distance_m < self.cell_radius_m) {
            return bad("require 0 < min_distance_m < cell_radius_m");
        }
        if !(self.bandwidth_hz > 0.0 && self.sampling_rate_hz > 0.0) {
            return bad("bandwidth and sampling rate must be positive");
        }
        if self.sigma_sh_db < 0.0 {
            return bad("shadowing spread must be non-negative");
        }
        if self.b_cap == 0 || self.b_cap > 30 {
            return bad("b_cap must lie in 1..=30");
        }
        Ok(())
    }
}
