//! ADC bit allocation under a total receiver power budget.
//!
//! For a fixed number `M` of activated chains (the `M` strongest by
//! desired-signal variance), relaxing bits to reals and replacing the
//! switching power by a constant average turns the problem into a convex
//! program with a closed-form solution:
//!
//! ```text
//! 2^{b_i} = p~ w_i^{1/3} / (2 c f_s sum_{j<=M} w_j^{1/3})
//! ```
//!
//! where `w_i` is the variance on chain `i` and `p~` is the budget left for
//! quantization once LNAs, baseband, average switching, and the `M` RF chains
//! are paid for. The total relaxed MSQE is unimodal in `M`, so the best `M`
//! is found by a neighbor-comparing binary search. The winning solution is
//! clipped at zero, rounded, capped at `b_cap`, and greedily trimmed until
//! the integer power model fits the budget. Budget freed by the trimming is
//! then handed back, one bit at a time, to the `M` chosen chains.

use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{check_len, Error, Result};
use crate::power::adc_power;
use crate::quantization::msqe;

/// Relative slack for budget comparisons, absorbing summation-order rounding.
pub const BUDGET_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    /// Desired-signal variance per RF chain, `p_u ||[H_b]_i||^2`.
    pub sigma2_x: Vec<f64>,
    /// Total receiver power budget, watts.
    pub p: f64,
    /// Average per-ADC switching power assumed by the optimizer, watts.
    pub psw_bar: f64,
}

impl AllocationProblem {
    pub fn new(sigma2_x: Vec<f64>, p: f64, psw_bar: f64) -> Result<Self> {
        if sigma2_x.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidArgument(
                "signal variances must be finite and non-negative".into(),
            ));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("budget must be positive, got {p}")));
        }
        if !(psw_bar >= 0.0 && psw_bar.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "average switching power must be non-negative, got {psw_bar}"
            )));
        }
        Ok(Self { sigma2_x, p, psw_bar })
    }

    pub fn n_rf(&self) -> usize {
        self.sigma2_x.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    /// Integer bits per chain, in the caller's chain order.
    pub bits: Vec<u32>,
    /// Number of chains the search decided to activate.
    pub m_opt: usize,
    /// Clipped real-valued solution before rounding, caller's chain order.
    pub continuous_bits: Vec<f64>,
    /// Relaxed MSQE of `bits`.
    pub objective: f64,
    /// Model power of `bits` with average switching power substituted.
    pub budget_used: f64,
}

/// Power left for quantization when `m_s` chains are active. May be negative.
pub fn quantization_budget(p: f64, m_s: usize, psw_bar: f64, cfg: &SystemConfig) -> f64 {
    p - cfg.n_r as f64 * cfg.p_lna
        - 2.0 * cfg.n_rf as f64 * psw_bar
        - cfg.p_bb
        - m_s as f64 * cfg.chain_power()
}

/// Largest admissible number of active chains: limited by what the budget
/// can power, by the chains that carry any signal, and by `N_RF`.
pub fn m_max(p: f64, psw_bar: f64, sigma2_x: &[f64], cfg: &SystemConfig) -> Result<usize> {
    let nonzero = sigma2_x.iter().filter(|s| **s != 0.0).count();
    if nonzero == 0 {
        return Err(Error::NoActiveChains);
    }
    let spare = quantization_budget(p, 0, psw_bar, cfg);
    if spare <= 0.0 {
        return Err(Error::InfeasibleBudget(format!(
            "budget {p} W does not cover always-on consumption"
        )));
    }
    let chain = cfg.chain_power();
    let affordable = if chain > 0.0 {
        let ratio = spare / chain;
        // Guard against an exact ratio landing one ulp under an integer.
        let m = (ratio + ratio.abs() * 1e-12).floor();
        if m >= usize::MAX as f64 {
            usize::MAX
        } else {
            m as usize
        }
    } else {
        usize::MAX
    };
    let m = affordable.min(nonzero).min(sigma2_x.len());
    if m < 1 {
        return Err(Error::InfeasibleBudget(format!(
            "budget {p} W cannot activate a single RF chain"
        )));
    }
    Ok(m)
}

/// Closed-form relaxed optimum over the `m_s` strongest chains.
///
/// `sorted_sigma2` must be in descending order; only its first `m_s` entries
/// are used and all of them must be positive. The returned bits exhaust the
/// budget exactly: `2 sum c f_s 2^{b_i} = p_tilde`.
pub fn continuous_allocation(
    sorted_sigma2: &[f64],
    m_s: usize,
    p_tilde: f64,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    if !(p_tilde > 0.0) {
        return Err(Error::InfeasibleBudget(format!(
            "quantization budget {p_tilde} W is not positive"
        )));
    }
    if m_s == 0 || m_s > sorted_sigma2.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot activate {m_s} of {} chains",
            sorted_sigma2.len()
        )));
    }
    let active = &sorted_sigma2[..m_s];
    if active.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument(
            "active chains need positive signal variance".into(),
        ));
    }
    let cube_roots: Vec<f64> = active.iter().map(|w| w.cbrt()).collect();
    let norm: f64 = cube_roots.iter().sum();
    let level = (p_tilde / (2.0 * cfg.adc_step_power())).log2();
    Ok(cube_roots.iter().map(|r| level + (r / norm).log2()).collect())
}

/// `sum_i (pi sqrt(3)/2) sigma2_i 2^{-2 b_i}` over every chain, including
/// chains left at zero bits.
pub fn total_relaxed_msqe(bits: &[f64], sigma2_x: &[f64]) -> f64 {
    bits.iter().zip(sigma2_x).map(|(&b, &s)| msqe(b, s)).sum()
}

/// Integer power model with the average switching power substituted.
pub fn model_power(bits: &[u32], psw_bar: f64, cfg: &SystemConfig) -> f64 {
    let base = cfg.n_r as f64 * cfg.p_lna + 2.0 * cfg.n_rf as f64 * psw_bar + cfg.p_bb;
    base + bits.iter().map(|&b| active_chain_cost(b, cfg)).sum::<f64>()
}

fn active_chain_cost(bits: u32, cfg: &SystemConfig) -> f64 {
    if bits == 0 {
        0.0
    } else {
        cfg.chain_power() + 2.0 * adc_power(bits, cfg)
    }
}

/// Variances sorted in descending order, ties kept in chain order, together
/// with the permutation that produced them.
pub(crate) fn sort_descending(sigma2_x: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..sigma2_x.len()).collect();
    order.sort_by(|&a, &b| sigma2_x[b].total_cmp(&sigma2_x[a]).then(a.cmp(&b)));
    let sorted = order.iter().map(|&i| sigma2_x[i]).collect();
    (order, sorted)
}

/// Clipped solution `[max(b^s, 0), 0]` over all chains, sorted order.
fn clipped_solution(
    sorted: &[f64],
    m_s: usize,
    p: f64,
    psw_bar: f64,
    cfg: &SystemConfig,
) -> Vec<f64> {
    let mut bits = vec![0.0; sorted.len()];
    let p_tilde = quantization_budget(p, m_s, psw_bar, cfg);
    if p_tilde > 0.0 {
        let bs = continuous_allocation(sorted, m_s, p_tilde, cfg)
            .expect("prefix is positive and the budget is positive");
        for (dst, b) in bits.iter_mut().zip(bs) {
            *dst = b.max(0.0);
        }
    }
    bits
}

/// Relaxed MSQE of the clipped closed-form solution when the `m_s` strongest
/// chains are forced active. Exposed for scanning `M` exhaustively.
pub fn relaxed_msqe_for_m(problem: &AllocationProblem, m_s: usize, cfg: &SystemConfig) -> Result<f64> {
    let m_dag = m_max(problem.p, problem.psw_bar, &problem.sigma2_x, cfg)?;
    if m_s == 0 || m_s > m_dag {
        return Err(Error::InvalidArgument(format!(
            "m_s = {m_s} outside 1..={m_dag}"
        )));
    }
    let (_, sorted) = sort_descending(&problem.sigma2_x);
    let bits = clipped_solution(&sorted, m_s, problem.p, problem.psw_bar, cfg);
    Ok(total_relaxed_msqe(&bits, &sorted))
}

/// Binary search over `1..=m_dag` comparing each midpoint with its
/// neighbors. Stops when neither neighbor is strictly better; otherwise
/// continues in the half holding the better neighbor. Ties go to the
/// smaller `M`.
fn search_m(m_dag: usize, mut objective: impl FnMut(usize) -> f64) -> usize {
    let mut cache = vec![None; m_dag + 1];
    let mut eval = |m: usize| *cache[m].get_or_insert_with(|| objective(m));
    let (mut lo, mut hi) = (1, m_dag);
    loop {
        let mid = lo + (hi - lo) / 2;
        let left = mid.saturating_sub(1).max(lo);
        let right = (mid + 1).min(hi);
        let mut best = left;
        let mut best_val = eval(left);
        for m in [mid, right] {
            let v = eval(m);
            if v < best_val {
                best = m;
                best_val = v;
            }
        }
        if best == mid || eval(mid) <= best_val {
            return mid;
        }
        if best < mid {
            hi = mid - 1;
        } else {
            lo = mid + 1;
        }
    }
}

/// Rounds a clipped real solution to the nearest integers (halves away from
/// zero), caps at `b_cap`, then removes single bits until
/// `base + sum chain_cost(b_i)` fits the budget.
///
/// Each removal takes the bit with the largest power saved per unit of MSQE
/// added; ties go to the lower chain index.
pub fn round_and_repair(
    continuous: &[f64],
    sigma2_x: &[f64],
    b_cap: u32,
    base: f64,
    chain_cost: impl Fn(u32) -> f64,
    budget: f64,
) -> Vec<u32> {
    let mut bits: Vec<u32> = continuous
        .iter()
        .map(|b| (b.max(0.0).round() as u32).min(b_cap))
        .collect();
    let limit = budget + budget.abs() * BUDGET_RTOL;
    loop {
        let used = base + bits.iter().map(|&b| chain_cost(b)).sum::<f64>();
        if used <= limit {
            return bits;
        }
        let mut pick: Option<(usize, f64)> = None;
        for (i, &b) in bits.iter().enumerate() {
            if b == 0 {
                continue;
            }
            let saved = chain_cost(b) - chain_cost(b - 1);
            let added = msqe((b - 1) as f64, sigma2_x[i]) - msqe(b as f64, sigma2_x[i]);
            let score = if added > 0.0 { saved / added } else { f64::INFINITY };
            if pick.is_none_or(|(_, s)| score > s) {
                pick = Some((i, score));
            }
        }
        match pick {
            Some((i, _)) => bits[i] -= 1,
            // Everything is already off; the base alone exceeds the budget.
            None => return bits,
        }
    }
}

/// Spends budget left over after [`round_and_repair`]: adds single bits to
/// the first `eligible` chains while `base + sum chain_cost(b_i)` stays
/// within the budget. Each addition takes the bit with the largest MSQE
/// removed per watt; ties go to the lower chain index.
pub fn fill_slack(
    bits: &mut [u32],
    sigma2_x: &[f64],
    eligible: usize,
    b_cap: u32,
    base: f64,
    chain_cost: impl Fn(u32) -> f64,
    budget: f64,
) {
    let limit = budget + budget.abs() * BUDGET_RTOL;
    let eligible = eligible.min(bits.len());
    loop {
        let used = base + bits.iter().map(|&b| chain_cost(b)).sum::<f64>();
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..eligible {
            let b = bits[i];
            if b >= b_cap || sigma2_x[i] <= 0.0 {
                continue;
            }
            let extra = chain_cost(b + 1) - chain_cost(b);
            if used + extra > limit {
                continue;
            }
            let gained = msqe(b as f64, sigma2_x[i]) - msqe((b + 1) as f64, sigma2_x[i]);
            let score = if extra > 0.0 { gained / extra } else { f64::INFINITY };
            if pick.is_none_or(|(_, s)| score > s) {
                pick = Some((i, score));
            }
        }
        match pick {
            Some((i, _)) => bits[i] += 1,
            None => return,
        }
    }
}

/// Solves the bit-allocation problem for one channel realization.
pub fn allocate_bits(problem: &AllocationProblem, cfg: &SystemConfig) -> Result<AllocationResult> {
    check_len(cfg.n_rf, problem.n_rf())?;
    let m_dag = m_max(problem.p, problem.psw_bar, &problem.sigma2_x, cfg)?;
    let (order, sorted) = sort_descending(&problem.sigma2_x);

    let m_opt = search_m(m_dag, |m| {
        let bits = clipped_solution(&sorted, m, problem.p, problem.psw_bar, cfg);
        total_relaxed_msqe(&bits, &sorted)
    });
    let clipped = clipped_solution(&sorted, m_opt, problem.p, problem.psw_bar, cfg);

    let base = model_power(&vec![0; sorted.len()], problem.psw_bar, cfg);
    let cost = |b| active_chain_cost(b, cfg);
    let mut sorted_bits = round_and_repair(&clipped, &sorted, cfg.b_cap, base, cost, problem.p);
    fill_slack(&mut sorted_bits, &sorted, m_opt, cfg.b_cap, base, cost, problem.p);

    let mut bits = vec![0; sorted.len()];
    let mut continuous_bits = vec![0.0; sorted.len()];
    for (pos, &chain) in order.iter().enumerate() {
        bits[chain] = sorted_bits[pos];
        continuous_bits[chain] = clipped[pos];
    }
    let objective = total_relaxed_msqe(
        &bits.iter().map(|&b| b as f64).collect::<Vec<_>>(),
        &problem.sigma2_x,
    );
    let budget_used = model_power(&bits, problem.psw_bar, cfg);
    Ok(AllocationResult {
        bits,
        m_opt,
        continuous_bits,
        objective,
        budget_used,
    })
}
