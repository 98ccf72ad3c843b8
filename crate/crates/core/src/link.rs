//! Uplink rates under quantization-weighted MRC and the Monte Carlo
//! comparison of four receivers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocator::{allocate_bits, continuous_allocation, round_and_repair, sort_descending, AllocationProblem};
use crate::channel::{self, BeamspaceChannel};
use crate::config::SystemConfig;
use crate::error::{check_len, Error, Result};
use crate::power::{adc_power, total_power, BitAllocation};
use crate::quantization::{alpha, quantization_noise_covariance};
use crate::switching::PswFit;

/// SINR components for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    pub signal: f64,
    pub user_interference: f64,
    pub noise: f64,
    pub quant_noise: f64,
}

impl RateTerms {
    pub fn sinr(&self) -> f64 {
        let den = self.user_interference + self.noise + self.quant_noise;
        if self.signal == 0.0 || den <= 0.0 {
            0.0
        } else {
            self.signal / den
        }
    }

    pub fn rate(&self) -> f64 {
        self.sinr().ln_1p() / std::f64::consts::LN_2
    }
}

/// Per-user SINR terms with combiner `W_alpha H_b`, where `H_b = G D^{1/2}`.
pub fn rate_terms(h_b: &DMatrix<Complex64>, gamma: &[f64], bits: &[u32], p_u: f64) -> Result<Vec<RateTerms>> {
    check_len(h_b.nrows(), bits.len())?;
    check_len(h_b.ncols(), gamma.len())?;
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::InvalidArgument(format!("large-scale gain {g} is not positive")));
    }
    let a2: Vec<f64> = bits.iter().map(|&b| alpha(b).powi(2)).collect();
    let qn = quantization_noise_covariance(h_b, bits, p_u)?;
    let mut g = h_b.clone();
    for (k, mut col) in g.column_iter_mut().enumerate() {
        col /= Complex64::from(gamma[k].sqrt());
    }
    let n_u = g.ncols();
    Ok((0..n_u)
        .map(|k| {
            let gk = g.column(k);
            let mut aligned = 0.0;
            let mut noise = 0.0;
            let mut quant_noise = 0.0;
            for (i, z) in gk.iter().enumerate() {
                let e = z.norm_sqr();
                aligned += a2[i] * e;
                noise += a2[i] * a2[i] * e;
                // W_alpha R W_alpha with R diagonal.
                quant_noise += a2[i] * qn[i] * e;
            }
            let user_interference = p_u
                * (0..n_u)
                    .filter(|&m| m != k)
                    .map(|m| {
                        let cross: Complex64 = gk
                            .iter()
                            .zip(g.column(m).iter())
                            .zip(&a2)
                            .map(|((x, y), w)| x.conj() * y * *w)
                            .sum();
                        gamma[m] * cross.norm_sqr()
                    })
                    .sum::<f64>();
            RateTerms {
                signal: p_u * gamma[k] * aligned * aligned,
                user_interference,
                noise,
                quant_noise,
            }
        })
        .collect())
}

/// Achievable rate of every user in bps/Hz.
pub fn instantaneous_rate(h_b: &DMatrix<Complex64>, gamma: &[f64], bits: &[u32], p_u: f64) -> Result<Vec<f64>> {
    Ok(rate_terms(h_b, gamma, bits, p_u)?.iter().map(RateTerms::rate).collect())
}

/// `R W / P` in bits per joule.
pub fn energy_efficiency(sum_rate_bps_hz: f64, total_power_w: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(total_power_w > 0.0) {
        return Err(Error::InvalidArgument(format!("total power {total_power_w} W is not positive")));
    }
    Ok(sum_rate_bps_hz * bandwidth_hz / total_power_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    InfiniteResolution,
    FixedAdc,
    AdcPowerBa,
    ProposedBa,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::InfiniteResolution,
        Method::FixedAdc,
        Method::AdcPowerBa,
        Method::ProposedBa,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::InfiniteResolution => "infinite_resolution",
            Method::FixedAdc => "fixed_adc",
            Method::AdcPowerBa => "adc_power_ba",
            Method::ProposedBa => "proposed_ba",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub method: Method,
    pub b_bar: u32,
    /// Mean sum spectral efficiency, bps/Hz.
    pub sum_se: f64,
    /// Mean sum SE times bandwidth over mean power, bits/J.
    pub ee: f64,
    /// Mean total receiver power, watts.
    pub mean_power: f64,
    pub mean_m_opt: f64,
    pub n: usize,
    /// Realizations where the budget could not be met.
    pub infeasible: usize,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    se: Kahan,
    power: Kahan,
    m: Kahan,
    n: usize,
    infeasible: usize,
}

impl Tally {
    fn finish(&self, method: Method, b_bar: u32, cfg: &SystemConfig) -> Result<SweepResult> {
        let n = self.n as f64;
        let sum_se = self.se.value() / n;
        let mean_power = self.power.value() / n;
        Ok(SweepResult {
            method,
            b_bar,
            sum_se,
            ee: energy_efficiency(sum_se, mean_power, cfg.bandwidth_hz)?,
            mean_power,
            mean_m_opt: self.m.value() / n,
            n: self.n,
            infeasible: self.infeasible,
        })
    }
}

/// Allocation of the ADC-power-constrained baseline: the closed form over
/// every chain with signal, under a budget equal to the ADC power of the
/// fixed `b_bar` receiver, rounded and trimmed against that budget alone.
pub fn adc_power_allocation(sigma2_x: &[f64], b_bar: u32, cfg: &SystemConfig) -> Result<Vec<u32>> {
    let n_rf = sigma2_x.len();
    let budget = 2.0 * n_rf as f64 * adc_power(b_bar, cfg);
    let m_s = sigma2_x.iter().filter(|s| **s > 0.0).count();
    if m_s == 0 || budget <= 0.0 {
        return Ok(vec![0; n_rf]);
    }
    let (order, sorted) = sort_descending(sigma2_x);
    let mut clipped = vec![0.0; n_rf];
    for (dst, b) in clipped.iter_mut().zip(continuous_allocation(&sorted, m_s, budget, cfg)?) {
        *dst = b.max(0.0);
    }
    let sorted_bits = round_and_repair(&clipped, &sorted, cfg.b_cap, 0.0, |b| 2.0 * adc_power(b, cfg), budget);
    let mut bits = vec![0; n_rf];
    for (pos, &chain) in order.iter().enumerate() {
        bits[chain] = sorted_bits[pos];
    }
    Ok(bits)
}

struct Block {
    channel: BeamspaceChannel,
    sigma2: Vec<f64>,
}

/// Runs the four receivers over `n_realizations` blocks for every `b_bar`,
/// predicting the average switching power with `psw`.
pub fn run_comparison<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    b_bar_grid: &[u32],
    psw: &PswFit,
    n_realizations: usize,
    rng: &mut R,
) -> Result<Vec<SweepResult>> {
    run_comparison_with(cfg, b_bar_grid, |p| psw.predict(p), n_realizations, rng)
}

/// [`run_comparison`] with an arbitrary switching-power predictor.
pub fn run_comparison_with<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    b_bar_grid: &[u32],
    psw: impl Fn(f64) -> f64 + Sync,
    n_realizations: usize,
    rng: &mut R,
) -> Result<Vec<SweepResult>> {
    cfg.validate()?;
    if n_realizations == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    if let Some(b) = b_bar_grid.iter().find(|b| **b == 0 || **b > cfg.b_cap) {
        return Err(Error::InvalidArgument(format!("b_bar = {b} outside 1..={}", cfg.b_cap)));
    }
    let p_u = cfg.transmit_power();
    let blocks: Vec<Block> = (0..n_realizations)
        .map(|_| {
            let channel = channel::realize(cfg, rng)?;
            let sigma2 = channel.row_energies().iter().map(|e| p_u * e).collect();
            Ok(Block { channel, sigma2 })
        })
        .collect::<Result<_>>()?;

    let per_b: Vec<[SweepResult; 4]> = b_bar_grid
        .par_iter()
        .map(|&b_bar| sweep_point(cfg, b_bar, &psw, &blocks))
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(4 * b_bar_grid.len());
    for m in 0..4 {
        out.extend(per_b.iter().map(|r| r[m].clone()));
    }
    Ok(out)
}

fn sweep_point(
    cfg: &SystemConfig,
    b_bar: u32,
    psw: &(impl Fn(f64) -> f64 + Sync),
    blocks: &[Block],
) -> Result<[SweepResult; 4]> {
    let n_rf = cfg.n_rf;
    let p_u = cfg.transmit_power();
    // Every receiver starts from its steady state at the nominal resolution.
    let mut prev = [
        vec![cfg.b_cap; n_rf],
        vec![b_bar; n_rf],
        vec![b_bar; n_rf],
        vec![b_bar; n_rf],
    ];
    let mut tally = [Tally::default(); 4];

    for block in blocks {
        let h_b = &block.channel.h_b;
        let gamma = &block.channel.gamma;
        let adc_bits = adc_power_allocation(&block.sigma2, b_bar, cfg)?;
        let adc_alloc = BitAllocation::new(adc_bits.clone(), prev[2].clone())?;
        let adc_total = total_power(&adc_alloc, cfg)?;

        let p = adc_total.total;
        let problem = AllocationProblem::new(block.sigma2.clone(), p, psw(p))?;
        let (proposed_bits, m_opt, infeasible) = match allocate_bits(&problem, cfg) {
            Ok(res) => (res.bits, res.m_opt, false),
            Err(Error::InfeasibleBudget(_)) => (vec![0; n_rf], 0, true),
            Err(e) => return Err(e),
        };

        let all_bits = [vec![cfg.b_cap; n_rf], vec![b_bar; n_rf], adc_bits, proposed_bits];
        for (k, bits) in all_bits.into_iter().enumerate() {
            let alloc = BitAllocation::new(bits, std::mem::take(&mut prev[k]))?;
            let power = if k == 2 { adc_total } else { total_power(&alloc, cfg)? };
            let rate: f64 = instantaneous_rate(h_b, gamma, &alloc.bits, p_u)?.iter().sum();
            let t = &mut tally[k];
            t.se.add(rate);
            t.power.add(power.total);
            t.m.add(if k == 3 { m_opt as f64 } else { power.n_act as f64 });
            t.n += 1;
            if k == 3 && infeasible {
                t.infeasible += 1;
            }
            prev[k] = alloc.bits;
        }
    }

    Ok([
        tally[0].finish(Method::InfiniteResolution, b_bar, cfg)?,
        tally[1].finish(Method::FixedAdc, b_bar, cfg)?,
        tally[2].finish(Method::AdcPowerBa, b_bar, cfg)?,
        tally[3].finish(Method::ProposedBa, b_bar, cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::beta;
    use crate::rng_for;

    fn scalar(g: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, g)
    }

    #[test]
    fn scalar_channel_hand_computation() {
        for b in 1..=6 {
            for p_u in [0.1, 1.0, 10.0] {
                let a = alpha(b);
                let q = beta(b);
                let want = p_u * a / (a + q * (p_u + 1.0));
                let terms = rate_terms(&scalar(Complex64::new(1.0, 0.0)), &[1.0], &[b], p_u).unwrap();
                assert!((terms[0].sinr() - want).abs() < 1e-14 * want, "b = {b}");
                assert_eq!(terms[0].user_interference, 0.0);
            }
        }
        let a = alpha(1);
        // The 1-bit Lloyd-Max gain is exactly 2/pi.
        assert!((a - std::f64::consts::FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn zero_bits_give_zero_rate() {
        let mut rng = rng_for(3, 0);
        let cfg = SystemConfig::desk();
        let ch = channel::realize(&cfg, &mut rng).unwrap();
        let rates = instantaneous_rate(&ch.h_b, &ch.gamma, &vec![0; cfg.n_rf], cfg.transmit_power()).unwrap();
        assert!(rates.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn terms_are_nonnegative_and_finite() {
        let cfg = SystemConfig::desk();
        let mut rng = rng_for(4, 0);
        for t in 0..20 {
            let ch = channel::realize(&cfg, &mut rng).unwrap();
            let bits: Vec<u32> = (0..cfg.n_rf).map(|i| ((i + t) % 7) as u32).collect();
            for term in rate_terms(&ch.h_b, &ch.gamma, &bits, cfg.transmit_power()).unwrap() {
                assert!(term.signal >= 0.0 && term.user_interference >= 0.0);
                assert!(term.noise >= 0.0 && term.quant_noise >= 0.0);
                assert!(term.rate().is_finite());
            }
        }
    }

    #[test]
    fn rate_dimension_checks() {
        let h = DMatrix::from_element(2, 1, Complex64::new(1.0, 0.0));
        assert!(instantaneous_rate(&h, &[1.0], &[1], 1.0).is_err());
        assert!(instantaneous_rate(&h, &[1.0, 1.0], &[1, 1], 1.0).is_err());
        assert!(instantaneous_rate(&h, &[0.0], &[1, 1], 1.0).is_err());
    }

    #[test]
    fn energy_efficiency_examples() {
        assert_eq!(energy_efficiency(0.0, 3.0, 1e9).unwrap(), 0.0);
        assert!((energy_efficiency(10.0, 10.0, 1e9).unwrap() - 1e9).abs() < 1e-3);
        assert_eq!(
            energy_efficiency(3.0, 2.0, 2e9).unwrap(),
            2.0 * energy_efficiency(3.0, 2.0, 1e9).unwrap()
        );
        assert!(energy_efficiency(1.0, 0.0, 1e9).is_err());
    }

    #[test]
    fn adc_power_baseline_fits_its_budget() {
        let cfg = SystemConfig::desk();
        let mut rng = rng_for(6, 0);
        for b_bar in 1..=8 {
            let ch = channel::realize(&cfg, &mut rng).unwrap();
            let sigma2: Vec<f64> = ch.row_energies().iter().map(|e| cfg.transmit_power() * e).collect();
            let bits = adc_power_allocation(&sigma2, b_bar, &cfg).unwrap();
            let used: f64 = bits.iter().map(|&b| 2.0 * adc_power(b, &cfg)).sum();
            let budget = 2.0 * cfg.n_rf as f64 * adc_power(b_bar, &cfg);
            assert!(used <= budget * (1.0 + 1e-12));
        }
        assert_eq!(adc_power_allocation(&[0.0, 0.0], 3, &cfg).unwrap(), vec![0, 0]);
    }

    #[test]
    fn comparison_bookkeeping() {
        let cfg = SystemConfig::desk();
        let fit = PswFit {
            n_u: cfg.n_u,
            l: cfg.l,
            p_min: 0.0,
            p_max: 1.0,
            coeffs: [0.0; 6],
            residual: 0.0,
        };
        let grid = [2, cfg.b_cap];
        let res = run_comparison(&cfg, &grid, &fit, 20, &mut rng_for(9, 0)).unwrap();
        assert_eq!(res.len(), 8);
        for r in &res {
            assert_eq!(r.n, 20);
            assert!(r.sum_se >= 0.0);
            let ee = r.sum_se * cfg.bandwidth_hz / r.mean_power;
            assert!((r.ee - ee).abs() <= 1e-12 * ee);
        }
        let inf = res.iter().find(|r| r.method == Method::InfiniteResolution && r.b_bar == cfg.b_cap).unwrap();
        let fixed = res.iter().find(|r| r.method == Method::FixedAdc && r.b_bar == cfg.b_cap).unwrap();
        assert_eq!(inf.sum_se, fixed.sum_se);
        assert_eq!(inf.mean_power, fixed.mean_power);

        let again = run_comparison(&cfg, &grid, &fit, 20, &mut rng_for(9, 0)).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn comparison_rejects_bad_grid() {
        let cfg = SystemConfig::desk();
        let f = |_: f64| 0.0;
        assert!(run_comparison_with(&cfg, &[0], f, 5, &mut rng_for(1, 0)).is_err());
        assert!(run_comparison_with(&cfg, &[13], f, 5, &mut rng_for(1, 0)).is_err());
        assert!(run_comparison_with(&cfg, &[3], f, 0, &mut rng_for(1, 0)).is_err());
    }
}
