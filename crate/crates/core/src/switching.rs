//! Off-line estimation of the average per-ADC switching power.
//!
//! The allocator needs a constant `P_sw` to stay convex, but the switching
//! power it actually incurs depends on the allocations it produces. For a
//! budget `p` the trainer sweeps candidate estimates, runs the allocator over
//! a chain of independent channel realizations with each candidate, and keeps
//! the candidate closest to the switching power it induced. A degree-5
//! least-squares polynomial in `p` then summarizes the trained points, and
//! one fit per `(N_u, L)` scenario is stored in a plain-text look-up table.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::allocator::{allocate_bits, AllocationProblem};
use crate::channel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::power::{switching_power, total_power, BitAllocation};

pub const POLY_DEGREE: usize = 5;
const N_COEFFS: usize = POLY_DEGREE + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingOptions {
    /// Channel realizations per candidate estimate.
    pub n_train: usize,
    /// Log-spaced positive candidates; zero is always added.
    pub n_candidates: usize,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            n_train: 200,
            n_candidates: 64,
        }
    }
}

/// Desired-signal variance vectors for a chain of independent blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub sigma2: Vec<Vec<f64>>,
}

impl TrainingSet {
    /// Draws `n_train` blocks, re-dropping the users for every block.
    pub fn draw<R: Rng + ?Sized>(cfg: &SystemConfig, n_train: usize, rng: &mut R) -> Result<Self> {
        let p_u = cfg.transmit_power();
        let sigma2 = (0..n_train)
            .map(|_| {
                let ch = channel::realize(cfg, rng)?;
                Ok(ch.row_energies().iter().map(|e| p_u * e).collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { sigma2 })
    }
}

/// One trained point: the chosen estimate and the switching power it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingPoint {
    pub p: f64,
    pub t_p: f64,
    pub p_act: f64,
}

/// Per-ADC-pair average switching power over a chained run: the total
/// switching power divided by `N_RF` and the number of blocks.
pub fn actual_average_switching_power(run: &[BitAllocation], cfg: &SystemConfig) -> Result<f64> {
    let Some(first) = run.first() else {
        return Err(Error::InvalidArgument("empty allocation sequence".into()));
    };
    let n_rf = first.bits.len();
    if n_rf == 0 {
        return Err(Error::InvalidArgument("allocation with no chains".into()));
    }
    let mut total = 0.0;
    for alloc in run {
        crate::error::check_len(n_rf, alloc.bits.len())?;
        crate::error::check_len(n_rf, alloc.prev_bits.len())?;
        total += alloc
            .bits
            .iter()
            .zip(&alloc.prev_bits)
            .map(|(&b, &p)| switching_power(b, p, cfg))
            .sum::<f64>();
    }
    Ok(total / (n_rf as f64 * run.len() as f64))
}

/// Zero followed by log-spaced values up to the largest per-ADC switching
/// cost, `max(c_sw) 2^b_cap`. The smallest positive candidate is one
/// conversion step shared by all `N_RF` chains.
pub fn candidate_grid(cfg: &SystemConfig, n_candidates: usize) -> Vec<f64> {
    let step = cfg.c_sw_up.max(cfg.c_sw_down);
    let hi = step * 2f64.powi(cfg.b_cap as i32);
    let mut grid = vec![0.0];
    if hi <= 0.0 || n_candidates == 0 {
        return grid;
    }
    let lo = step / cfg.n_rf as f64;
    if n_candidates == 1 {
        grid.push(hi);
        return grid;
    }
    let ratio = (hi / lo).ln() / (n_candidates - 1) as f64;
    grid.extend((0..n_candidates).map(|k| lo * (ratio * k as f64).exp()));
    grid
}

/// Default training budgets: `n_points` log-spaced values from the power of
/// the 1-bit fixed-resolution receiver to that of the `b_cap` receiver.
pub fn default_budget_grid(cfg: &SystemConfig, n_points: usize) -> Result<Vec<f64>> {
    let fixed = |b: u32| total_power(&BitAllocation::steady(vec![b; cfg.n_rf]), cfg).map(|p| p.total);
    let (lo, hi) = (fixed(1)?, fixed(cfg.b_cap)?);
    if n_points < 2 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "cannot span [{lo}, {hi}] W with {n_points} budgets"
        )));
    }
    let step = (hi / lo).ln() / (n_points - 1) as f64;
    let mut grid: Vec<f64> = (0..n_points).map(|k| lo * (step * k as f64).exp()).collect();
    grid[n_points - 1] = hi;
    Ok(grid)
}

/// Average switching power actually incurred when the allocator runs with
/// estimate `psw_est` over the chained blocks of `set`. `None` if the budget
/// cannot be met with that estimate.
pub fn induced_switching_power(
    p: f64,
    psw_est: f64,
    set: &TrainingSet,
    cfg: &SystemConfig,
) -> Result<Option<f64>> {
    let mut prev = vec![0u32; cfg.n_rf];
    let mut run = Vec::with_capacity(set.sigma2.len());
    for sigma2 in &set.sigma2 {
        let problem = AllocationProblem::new(sigma2.clone(), p, psw_est)?;
        let bits = match allocate_bits(&problem, cfg) {
            Ok(res) => res.bits,
            Err(Error::InfeasibleBudget(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        run.push(BitAllocation {
            bits: bits.clone(),
            prev_bits: std::mem::replace(&mut prev, bits),
        });
    }
    actual_average_switching_power(&run, cfg).map(Some)
}

/// Trains `T_p` for budget `p` over a fixed set of blocks: the candidate
/// closest to the switching power it induces, ties to the smaller candidate.
pub fn train_on_set(
    p: f64,
    set: &TrainingSet,
    candidates: &[f64],
    cfg: &SystemConfig,
) -> Result<TrainingPoint> {
    let induced: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|&c| induced_switching_power(p, c, set, cfg))
        .collect::<Result<_>>()?;
    let mut best: Option<TrainingPoint> = None;
    for (&c, act) in candidates.iter().zip(induced) {
        let Some(act) = act else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let gap = (c - act).abs();
                let best_gap = (b.t_p - b.p_act).abs();
                gap < best_gap || (gap == best_gap && c < b.t_p)
            }
        };
        if better {
            best = Some(TrainingPoint { p, t_p: c, p_act: act });
        }
    }
    best.ok_or_else(|| {
        Error::InfeasibleBudget(format!("budget {p} W is infeasible for every candidate estimate"))
    })
}

/// Trains `T_p` for a single budget on freshly drawn blocks.
pub fn train_average_switching_power<R: Rng + ?Sized>(
    p: f64,
    cfg: &SystemConfig,
    opts: &TrainingOptions,
    rng: &mut R,
) -> Result<TrainingPoint> {
    let set = TrainingSet::draw(cfg, opts.n_train, rng)?;
    train_on_set(p, &set, &candidate_grid(cfg, opts.n_candidates), cfg)
}

/// Trains every budget in `p_grid` on one shared set of blocks, so the
/// points differ only through the budget.
pub fn train_grid<R: Rng + ?Sized>(
    p_grid: &[f64],
    cfg: &SystemConfig,
    opts: &TrainingOptions,
    rng: &mut R,
) -> Result<Vec<TrainingPoint>> {
    let set = TrainingSet::draw(cfg, opts.n_train, rng)?;
    let candidates = candidate_grid(cfg, opts.n_candidates);
    p_grid
        .iter()
        .map(|&p| train_on_set(p, &set, &candidates, cfg))
        .collect()
}

/// Degree-5 polynomial fit of `T_p` against `p` for one `(N_u, L)` scenario.
///
/// Coefficients multiply powers of the standardized budget
/// `x = (2p - p_min - p_max) / (p_max - p_min)`, which maps the training
/// range onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PswFit {
    pub n_u: usize,
    pub l: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub coeffs: [f64; N_COEFFS],
    /// RMS fit residual, watts.
    pub residual: f64,
}

impl PswFit {
    fn standardize(&self, p: f64) -> f64 {
        let half = 0.5 * (self.p_max - self.p_min);
        if half > 0.0 {
            (p - 0.5 * (self.p_min + self.p_max)) / half
        } else {
            0.0
        }
    }

    fn eval_raw(&self, p: f64) -> f64 {
        let x = self.standardize(p);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Predicted average switching power. Budgets outside the training range
    /// are clamped to the nearest end; negative predictions become zero.
    pub fn predict(&self, p: f64) -> f64 {
        self.eval_raw(p.clamp(self.p_min, self.p_max)).max(0.0)
    }

    /// Coefficients of the same polynomial in powers of `p` itself.
    pub fn raw_coefficients(&self) -> [f64; N_COEFFS] {
        let half = 0.5 * (self.p_max - self.p_min);
        let center = 0.5 * (self.p_min + self.p_max);
        let mut raw = [0.0; N_COEFFS];
        if half <= 0.0 {
            raw[0] = self.eval_raw(center);
            return raw;
        }
        // ((p - m) / h)^k = sum_j C(k, j) p^j (-m)^(k-j) / h^k
        for (k, &c) in self.coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for (j, r) in raw.iter_mut().enumerate().take(k + 1) {
                *r += c * binom * (-center).powi((k - j) as i32) / half.powi(k as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        raw
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingPowerModel {
    /// Training points `(p, T_p)`, ascending in `p`.
    pub grid: Vec<(f64, f64)>,
    pub fit: PswFit,
}

pub fn predict_psw(model: &SwitchingPowerModel, p: f64) -> f64 {
    model.fit.predict(p)
}

/// Ordinary least-squares degree-5 fit of `(p, T_p)` pairs.
pub fn fit_lsp(grid: &[(f64, f64)], n_u: usize, l: usize) -> Result<SwitchingPowerModel> {
    if grid.len() < N_COEFFS {
        return Err(Error::InvalidArgument(format!(
            "a degree-{POLY_DEGREE} fit needs at least {N_COEFFS} points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|(p, t)| !p.is_finite() || !t.is_finite()) {
        return Err(Error::InvalidArgument("non-finite training point".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    if grid.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::RankDeficient("duplicate budget in training grid".into()));
    }
    let mut fit = PswFit {
        n_u,
        l,
        p_min: grid[0].0,
        p_max: grid[grid.len() - 1].0,
        coeffs: [0.0; N_COEFFS],
        residual: 0.0,
    };
    let design = DMatrix::from_fn(grid.len(), N_COEFFS, |r, c| {
        fit.standardize(grid[r].0).powi(c as i32)
    });
    let target = DVector::from_iterator(grid.len(), grid.iter().map(|g| g.1));
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    if svd.singular_values.min() <= s_max * 1e-12 {
        return Err(Error::RankDeficient("Vandermonde design is singular".into()));
    }
    let solution = svd
        .solve(&target, s_max * 1e-14)
        .map_err(|e| Error::RankDeficient(e.to_owned()))?;
    for (dst, c) in fit.coeffs.iter_mut().zip(solution.iter()) {
        // Normalizes -0.0 so an all-zero fit prints as zeros.
        *dst = c + 0.0;
    }
    let residuals = design * solution - target;
    fit.residual = (residuals.norm_squared() / grid.len() as f64).sqrt();
    Ok(SwitchingPowerModel { grid, fit })
}

/// Fitted switching-power models keyed by `(N_u, L)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LookupTable {
    entries: Vec<PswFit>,
}

const TABLE_HEADER: &str = "# average switching power look-up table\n\
# x = (2 p - p_min - p_max) / (p_max - p_min); P_sw(p) = max(0, sum_k c_k x^k), p clamped to [p_min, p_max]\n\
# n_u l p_min p_max c0 c1 c2 c3 c4 c5 fit_residual\n";

impl LookupTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the entry for the fit's scenario.
    pub fn insert(&mut self, fit: PswFit) {
        match self.entries.iter_mut().find(|e| (e.n_u, e.l) == (fit.n_u, fit.l)) {
            Some(slot) => *slot = fit,
            None => self.entries.push(fit),
        }
        self.entries.sort_by_key(|e| (e.n_u, e.l));
    }

    pub fn get(&self, n_u: usize, l: usize) -> Option<&PswFit> {
        self.entries.iter().find(|e| e.n_u == n_u && e.l == l)
    }

    pub fn entries(&self) -> &[PswFit] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(TABLE_HEADER);
        for e in &self.entries {
            write!(out, "{} {} {:e} {:e}", e.n_u, e.l, e.p_min, e.p_max).unwrap();
            for c in e.coeffs {
                write!(out, " {c:e}").unwrap();
            }
            writeln!(out, " {:e}", e.residual).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Self::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 + N_COEFFS {
                return Err(err(format!("expected {} fields, found {}", 5 + N_COEFFS, fields.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
            let float = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
            let mut coeffs = [0.0; N_COEFFS];
            for (dst, s) in coeffs.iter_mut().zip(&fields[4..4 + N_COEFFS]) {
                *dst = float(s)?;
            }
            let fit = PswFit {
                n_u: int(fields[0])?,
                l: int(fields[1])?,
                p_min: float(fields[2])?,
                p_max: float(fields[3])?,
                coeffs,
                residual: float(fields[4 + N_COEFFS])?,
            };
            if !(fit.p_min <= fit.p_max) {
                return Err(err("p_min exceeds p_max".into()));
            }
            if table.get(fit.n_u, fit.l).is_some() {
                return Err(err(format!("duplicate entry for ({}, {})", fit.n_u, fit.l)));
            }
            table.insert(fit);
        }
        Ok(table)
    }
}
