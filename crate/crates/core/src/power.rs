//! Receiver power consumption: ADC quantization, resolution switching, and
//! the always-on and per-chain RF front-end.

use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{check_len, Error, Result};

/// Integer ADC resolutions for one coherence block together with the
/// resolutions of the previous block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitAllocation {
    pub bits: Vec<u32>,
    pub prev_bits: Vec<u32>,
}

impl BitAllocation {
    pub fn new(bits: Vec<u32>, prev_bits: Vec<u32>) -> Result<Self> {
        check_len(bits.len(), prev_bits.len())?;
        Ok(Self { bits, prev_bits })
    }

    /// Allocation with no resolution change since the previous block.
    pub fn steady(bits: Vec<u32>) -> Self {
        Self {
            prev_bits: bits.clone(),
            bits,
        }
    }

    pub fn n_act(&self) -> usize {
        self.bits.iter().filter(|b| **b > 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBreakdown {
    pub lna: f64,
    pub ps: f64,
    pub rf_chain: f64,
    pub adc: f64,
    pub switching: f64,
    pub baseband: f64,
    pub total: f64,
    pub n_act: usize,
}

/// Power of one ADC at integer resolution; a 0-bit ADC is switched off.
pub fn adc_power(bits: u32, cfg: &SystemConfig) -> f64 {
    if bits == 0 {
        0.0
    } else {
        cfg.adc_step_power() * 2f64.powi(bits as i32)
    }
}

/// Continuous ADC power `c f_s 2^b` used by the relaxed optimization; it does
/// not vanish at `b = 0`.
pub fn adc_power_relaxed(bits: f64, cfg: &SystemConfig) -> f64 {
    cfg.adc_step_power() * bits.exp2()
}

/// Cost of moving one ADC from `prev` to `bits`, proportional to the number
/// of comparators switched on or off. `2^0` counts as one comparator.
pub fn switching_power(bits: u32, prev: u32, cfg: &SystemConfig) -> f64 {
    let now = 2f64.powi(bits as i32);
    let before = 2f64.powi(prev as i32);
    match bits.cmp(&prev) {
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => cfg.c_sw_up * (now - before),
        std::cmp::Ordering::Less => cfg.c_sw_down * (before - now),
    }
}

/// Total receiver power. LNAs and baseband are always on; phase shifters and
/// RF chains only for chains whose ADCs have at least one bit. Each chain
/// drives an I/Q pair, hence the factor two on ADC and switching power.
pub fn total_power(alloc: &BitAllocation, cfg: &SystemConfig) -> Result<PowerBreakdown> {
    check_len(alloc.bits.len(), alloc.prev_bits.len())?;
    if let Some(b) = alloc.bits.iter().find(|b| **b > cfg.b_cap) {
        return Err(Error::InvalidArgument(format!(
            "{b} bits exceed the {}-bit cap",
            cfg.b_cap
        )));
    }
    let n_act = alloc.n_act();
    let lna = cfg.n_r as f64 * cfg.p_lna;
    let ps = n_act as f64 * cfg.n_r as f64 * cfg.p_ps;
    let rf_chain = n_act as f64 * cfg.p_rf_chain;
    let adc = 2.0 * alloc.bits.iter().map(|&b| adc_power(b, cfg)).sum::<f64>();
    let switching = 2.0
        * alloc
            .bits
            .iter()
            .zip(&alloc.prev_bits)
            .map(|(&b, &p)| switching_power(b, p, cfg))
            .sum::<f64>();
    let baseband = cfg.p_bb;
    Ok(PowerBreakdown {
        lna,
        ps,
        rf_chain,
        adc,
        switching,
        baseband,
        total: lna + ps + rf_chain + adc + switching + baseband,
        n_act,
    })
}
