//! Sparse beamspace mmWave channel generation and analog path selection.
//!
//! The antenna array is a ULA whose steering vectors sit on the DFT grid, so
//! the array-response matrix is the unitary DFT and the channel is fully
//! described in beamspace: each user contributes `L` nonzero complex path
//! gains scaled by its large-scale gain. The analog combiner keeps the
//! `N_RF` strongest beamspace rows.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Per-user distances and linear large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGeometry {
    pub distances_m: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Beamspace channel for one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamspaceChannel {
    /// `N_r x N_u` matrix of small-scale path gains, `L` nonzeros per column.
    pub sparse_gains: DMatrix<Complex64>,
    /// Linear large-scale gain per user.
    pub gamma: Vec<f64>,
    /// Beamspace rows kept by the analog combiner, strongest first.
    pub selected_rows: Vec<usize>,
    /// `N_RF x N_u` effective channel seen by the ADCs. Empty until
    /// [`select_rf_paths`] runs.
    pub h_b: DMatrix<Complex64>,
}

impl BeamspaceChannel {
    /// Full beamspace matrix `G~ D^{1/2}`.
    pub fn full(&self) -> DMatrix<Complex64> {
        let mut h = self.sparse_gains.clone();
        for (k, mut col) in h.column_iter_mut().enumerate() {
            col *= Complex64::from(self.gamma[k].sqrt());
        }
        h
    }

    /// Small-scale part `G` of the effective channel, i.e. `H_b D^{-1/2}`.
    pub fn effective_gains(&self) -> DMatrix<Complex64> {
        let mut g = self.h_b.clone();
        for (k, mut col) in g.column_iter_mut().enumerate() {
            col /= Complex64::from(self.gamma[k].sqrt());
        }
        g
    }

    /// Squared norm of each row of `H_b`.
    pub fn row_energies(&self) -> Vec<f64> {
        row_energies(&self.h_b)
    }
}

pub fn row_energies(h: &DMatrix<Complex64>) -> Vec<f64> {
    h.row_iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Unitary DFT matrix of steering vectors on the uniform spatial-angle grid:
/// entry `(n, i)` is `exp(-j 2 pi n i / N_r) / sqrt(N_r)` (zero-based).
pub fn steering_matrix(n_r: usize) -> DMatrix<Complex64> {
    assert!(n_r >= 1, "steering matrix needs at least one antenna");
    let scale = 1.0 / (n_r as f64).sqrt();
    DMatrix::from_fn(n_r, n_r, |n, i| {
        // Reduce the phase index modulo N_r to keep the argument small.
        let k = (n * i) % n_r;
        Complex64::from_polar(scale, -2.0 * PI * k as f64 / n_r as f64)
    })
}

/// Path loss in dB at distance `d_m` with an explicit shadowing draw.
pub fn path_loss_db(d_m: f64, shadowing_db: f64, cfg: &SystemConfig) -> f64 {
    cfg.alpha_pl + cfg.beta_pl * 10.0 * d_m.log10() + shadowing_db
}

/// Thermal noise floor in dBm over the configured bandwidth.
pub fn noise_power_dbm(cfg: &SystemConfig) -> f64 {
    -174.0 + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db
}

/// Noise-normalized large-scale gain `10^(-(PL + P_noise)/10)`.
pub fn large_scale_gain(d_m: f64, shadowing_db: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(d_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be positive, got {d_m}"
        )));
    }
    let gamma_db = -(path_loss_db(d_m, shadowing_db, cfg) + noise_power_dbm(cfg));
    Ok(10f64.powf(gamma_db / 10.0))
}

/// Drops `N_u` users uniformly over the annulus between `min_distance_m`
/// and `cell_radius_m` and draws their shadowing.
pub fn drop_users<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> UserGeometry {
    let r_min2 = cfg.min_distance_m * cfg.min_distance_m;
    let r_max2 = cfg.cell_radius_m * cfg.cell_radius_m;
    // sigma is validated non-negative; Normal only rejects non-finite spread.
    let shadowing = Normal::new(0.0, cfg.sigma_sh_db).expect("finite shadowing spread");
    let mut distances_m = Vec::with_capacity(cfg.n_u);
    let mut gamma = Vec::with_capacity(cfg.n_u);
    for _ in 0..cfg.n_u {
        let u: f64 = rng.random();
        let d = (r_min2 + u * (r_max2 - r_min2))
            .sqrt()
            .clamp(cfg.min_distance_m, cfg.cell_radius_m);
        let chi = shadowing.sample(rng);
        distances_m.push(d);
        gamma.push(large_scale_gain(d, chi, cfg).expect("distance is positive"));
    }
    UserGeometry { distances_m, gamma }
}

/// Standard circularly-symmetric complex Gaussian sample, `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `L` distinct beamspace rows per user with i.i.d. `CN(0, 1)` gains.
pub fn generate_beamspace_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    geometry: &UserGeometry,
    rng: &mut R,
) -> Result<BeamspaceChannel> {
    if cfg.l > cfg.n_r {
        return Err(Error::InvalidArgument(format!(
            "{} paths per user exceed {} beamspace rows",
            cfg.l, cfg.n_r
        )));
    }
    let n_u = geometry.gamma.len();
    let mut g = DMatrix::<Complex64>::zeros(cfg.n_r, n_u);
    for k in 0..n_u {
        let mut rows = rand::seq::index::sample(rng, cfg.n_r, cfg.l).into_vec();
        rows.sort_unstable();
        for row in rows {
            g[(row, k)] = complex_gaussian(rng);
        }
    }
    Ok(BeamspaceChannel {
        sparse_gains: g,
        gamma: geometry.gamma.clone(),
        selected_rows: Vec::new(),
        h_b: DMatrix::zeros(0, n_u),
    })
}

/// Keeps the `n_rf` beamspace rows with the largest energy (ties go to the
/// lower row index) and fills `H_b` with them, strongest first.
pub fn select_rf_paths(mut channel: BeamspaceChannel, n_rf: usize) -> BeamspaceChannel {
    let full = channel.full();
    let energies = row_energies(&full);
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[b].total_cmp(&energies[a]).then(a.cmp(&b)));
    order.truncate(n_rf.min(energies.len()));
    channel.h_b = full.select_rows(order.iter());
    channel.selected_rows = order;
    channel
}

/// One complete block: drop users, draw the channel, and select paths.
pub fn realize<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<BeamspaceChannel> {
    let geometry = drop_users(cfg, rng);
    let channel = generate_beamspace_channel(cfg, &geometry, rng)?;
    Ok(select_rf_paths(channel, cfg.n_rf))
}
