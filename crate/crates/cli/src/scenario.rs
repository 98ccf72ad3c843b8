//! Scenario files: a TOML document with `[system]`, `[sweep]`, `[training]`
//! and `[output]` sections. Every key is optional and falls back to the
//! full-scale defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hybrid_ba::switching::{default_budget_grid, TrainingOptions};
use hybrid_ba::SystemConfig;
use serde::{Deserialize, Serialize};

/// Environment variable naming the output directory when neither the
/// command line nor the scenario sets one.
pub const OUT_DIR_ENV: &str = "HYBRID_BA_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub system: SystemConfig,
    pub sweep: SweepSection,
    pub training: TrainingSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Nominal resolutions of the fixed-ADC reference.
    pub b_bar: Vec<u32>,
    pub n_realizations: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            b_bar: (1..=12).collect(),
            n_realizations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    /// Explicit budgets in watts. When absent, `n_points` log-spaced budgets
    /// between the 1-bit and `b_cap` fixed-resolution receivers are used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    pub n_points: usize,
    pub n_train: usize,
    pub n_candidates: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let opts = TrainingOptions::default();
        Self {
            p_grid: None,
            n_points: 15,
            n_train: opts.n_train,
            n_candidates: opts.n_candidates,
        }
    }
}

impl TrainingSection {
    pub fn options(&self) -> TrainingOptions {
        TrainingOptions {
            n_train: self.n_train,
            n_candidates: self.n_candidates,
        }
    }

    pub fn budgets(&self, cfg: &SystemConfig) -> Result<Vec<f64>> {
        match &self.p_grid {
            Some(grid) => Ok(grid.clone()),
            None => Ok(default_budget_grid(cfg, self.n_points)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub table: PathBuf,
    pub csv: PathBuf,
    pub training_csv: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            table: "psw_table.txt".into(),
            csv: "sweep.csv".into(),
            training_csv: "psw_training.csv".into(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid scenario {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let b_cap = self.system.b_cap;
        if let Some(b) = self.sweep.b_bar.iter().find(|b| **b == 0 || **b > b_cap) {
            anyhow::bail!("sweep b_bar {b} outside 1..={b_cap}");
        }
        if self.sweep.n_realizations == 0 {
            anyhow::bail!("sweep n_realizations must be positive");
        }
        if self.training.n_train == 0 {
            anyhow::bail!("training n_train must be positive");
        }
        Ok(())
    }

    /// Output directory: the explicit override, then `[output] dir`, then
    /// the environment variable, then the working directory.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
