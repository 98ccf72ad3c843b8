use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hybrid_ba::link::run_comparison;
use hybrid_ba::power::total_power;
use hybrid_ba::switching::{fit_lsp, train_grid, TrainingPoint};
use hybrid_ba::{
    allocate_bits, channel, rng_for, AllocationProblem, BitAllocation, LookupTable, PowerBreakdown,
    PswFit, SweepResult,
};
use serde::Serialize;

use crate::io::{sweep_csv, training_csv, ChannelDump};
use crate::scenario::Scenario;

/// Random streams derived from the scenario seed, one per command.
const TRAIN_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 2;
const DUMP_STREAM: u64 = 3;

pub struct TrainOutcome {
    pub table_path: PathBuf,
    pub points: Vec<TrainingPoint>,
    pub fit: PswFit,
}

/// Trains the switching-power model for the scenario and stores its fit in
/// the look-up table, keeping entries for other `(N_u, L)` pairs.
pub fn cmd_train(scenario_path: &Path, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    let scenario = Scenario::load(scenario_path)?;
    let cfg = &scenario.system;
    let dir = scenario.output_dir(out_dir);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let budgets = scenario.training.budgets(cfg)?;
    let mut rng = rng_for(cfg.seed, TRAIN_STREAM);
    let points = train_grid(&budgets, cfg, &scenario.training.options(), &mut rng)?;
    let grid: Vec<(f64, f64)> = points.iter().map(|pt| (pt.p, pt.t_p)).collect();
    let model = fit_lsp(&grid, cfg.n_u, cfg.l)?;

    let table_path = dir.join(&scenario.output.table);
    let mut table = if table_path.exists() {
        let text = std::fs::read_to_string(&table_path)
            .with_context(|| format!("cannot read {}", table_path.display()))?;
        LookupTable::parse(&text).with_context(|| format!("corrupt table {}", table_path.display()))?
    } else {
        LookupTable::new()
    };
    table.insert(model.fit);
    write(&table_path, &table.to_text())?;
    write(&dir.join(&scenario.output.training_csv), &training_csv(&points, &model.fit))?;

    Ok(TrainOutcome {
        table_path,
        points,
        fit: model.fit,
    })
}

pub struct SweepOutcome {
    pub csv_path: PathBuf,
    pub results: Vec<SweepResult>,
}

/// Runs the four-receiver comparison and writes the result CSV.
pub fn cmd_sweep(scenario_path: &Path, table_path: Option<&Path>, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    let scenario = Scenario::load(scenario_path)?;
    let cfg = &scenario.system;
    let dir = scenario.output_dir(out_dir);
    let table_path = table_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(&scenario.output.table));
    let fit = load_fit(&table_path, cfg.n_u, cfg.l)?;

    let mut rng = rng_for(cfg.seed, SWEEP_STREAM);
    let results = run_comparison(cfg, &scenario.sweep.b_bar, &fit, scenario.sweep.n_realizations, &mut rng)?;

    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let csv_path = dir.join(&scenario.output.csv);
    write(&csv_path, &sweep_csv(&results))?;
    Ok(SweepOutcome { csv_path, results })
}

fn load_fit(path: &Path, n_u: usize, l: usize) -> Result<PswFit> {
    let text = std::fs::read_to_string(path).with_context(|| {
        format!("cannot read look-up table {}; run `hybrid-ba train` first", path.display())
    })?;
    let table = LookupTable::parse(&text).with_context(|| format!("corrupt table {}", path.display()))?;
    table.get(n_u, l).copied().ok_or_else(|| {
        anyhow!(
            "table {} has no entry for n_u = {n_u}, l = {l}; run `hybrid-ba train` for this scenario first",
            path.display()
        )
    })
}

/// One-shot allocation for a stored channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    pub budget_w: f64,
    pub psw_bar_w: f64,
    pub sigma2_x: Vec<f64>,
    pub continuous_bits: Vec<f64>,
    pub bits: Vec<u32>,
    pub m_opt: usize,
    pub objective: f64,
    /// Model power with the average switching power substituted.
    pub power: PowerBreakdown,
}

impl AllocationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "budget_w {}", self.budget_w).unwrap();
        writeln!(out, "psw_bar_w {}", self.psw_bar_w).unwrap();
        writeln!(out, "m_opt {}", self.m_opt).unwrap();
        writeln!(out, "objective {}", self.objective).unwrap();
        writeln!(out, "chain sigma2_x continuous_bits bits").unwrap();
        for (i, ((s, c), b)) in self.sigma2_x.iter().zip(&self.continuous_bits).zip(&self.bits).enumerate() {
            writeln!(out, "{i} {s} {c} {b}").unwrap();
        }
        let p = &self.power;
        writeln!(out, "power_lna_w {}", p.lna).unwrap();
        writeln!(out, "power_ps_w {}", p.ps).unwrap();
        writeln!(out, "power_rf_chain_w {}", p.rf_chain).unwrap();
        writeln!(out, "power_adc_w {}", p.adc).unwrap();
        writeln!(out, "power_switching_w {}", p.switching).unwrap();
        writeln!(out, "power_baseband_w {}", p.baseband).unwrap();
        writeln!(out, "power_total_w {}", p.total).unwrap();
        writeln!(out, "n_act {}", p.n_act).unwrap();
        out
    }
}

/// Allocates bits for the channel in `channel_path` under budget `budget_w`.
/// Without a table the average switching power is taken as zero.
pub fn cmd_allocate(
    scenario_path: &Path,
    channel_path: &Path,
    budget_w: f64,
    table_path: Option<&Path>,
) -> Result<AllocationReport> {
    let scenario = Scenario::load(scenario_path)?;
    let cfg = &scenario.system;
    let text = std::fs::read_to_string(channel_path)
        .with_context(|| format!("cannot read channel {}", channel_path.display()))?;
    let dump = ChannelDump::parse(&text).with_context(|| format!("invalid channel {}", channel_path.display()))?;
    if dump.h_b.nrows() != cfg.n_rf {
        bail!(
            "channel has {} rows but the scenario has n_rf = {}",
            dump.h_b.nrows(),
            cfg.n_rf
        );
    }
    let psw_bar_w = match table_path {
        Some(path) => load_fit(path, cfg.n_u, cfg.l)?.predict(budget_w),
        None => 0.0,
    };

    let p_u = cfg.transmit_power();
    let sigma2_x: Vec<f64> = channel::row_energies(&dump.h_b).iter().map(|e| p_u * e).collect();
    let problem = AllocationProblem::new(sigma2_x.clone(), budget_w, psw_bar_w)?;
    let res = allocate_bits(&problem, cfg)?;

    let steady = total_power(&BitAllocation::steady(res.bits.clone()), cfg)?;
    let switching = 2.0 * cfg.n_rf as f64 * psw_bar_w;
    let power = PowerBreakdown {
        switching,
        total: steady.lna + steady.ps + steady.rf_chain + steady.adc + switching + steady.baseband,
        ..steady
    };
    Ok(AllocationReport {
        budget_w,
        psw_bar_w,
        sigma2_x,
        continuous_bits: res.continuous_bits,
        bits: res.bits,
        m_opt: res.m_opt,
        objective: res.objective,
        power,
    })
}

/// Writes realization `index` of the scenario's channel stream as a dump.
pub fn cmd_dump_channel(scenario_path: &Path, index: usize, output: &Path) -> Result<()> {
    let scenario = Scenario::load(scenario_path)?;
    let cfg = &scenario.system;
    let mut rng = rng_for(cfg.seed, DUMP_STREAM);
    let mut ch = channel::realize(cfg, &mut rng)?;
    for _ in 0..index {
        ch = channel::realize(cfg, &mut rng)?;
    }
    write(output, &ChannelDump::from(&ch).to_text())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}
