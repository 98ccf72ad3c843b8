//! Additive quantization noise model (AQNM) for the ADC pairs.
//!
//! A `b`-bit quantizer is linearized as `y_q = alpha * y + n_q`, where the
//! distortion factor `beta = 1 - alpha` is the normalized MSE of the optimal
//! scalar quantizer for a Gaussian input. Low resolutions use the Lloyd-Max
//! table; higher resolutions follow the high-resolution approximation
//! `(pi sqrt(3) / 2) 2^(-2b)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_gaussian, row_energies};
use crate::error::{check_len, Result};

pub mod lloyd_max;

pub use lloyd_max::{lloyd_max_codebook, LloydMaxCodebook};

/// `pi * sqrt(3) / 2`, the high-resolution distortion constant.
pub const HIGH_RES_COEFFICIENT: f64 = PI * 1.732_050_807_568_877_2 / 2.0;

/// Normalized distortion of the Lloyd-Max quantizer for a unit Gaussian,
/// `b = 1..=5`. Produced by [`lloyd_max_codebook`] at full convergence.
pub const BETA_TABLE: [f64; 5] = [
    0.363_380_227_632_418_6,
    0.117_481_847_829_324_03,
    0.034_547_760_788_495_53,
    0.009_501_008_008_182_765,
    0.002_504_668_355_671_979_5,
];

/// Distortion factor for an integer resolution. Zero bits destroy the signal.
pub fn beta(bits: u32) -> f64 {
    match bits {
        0 => 1.0,
        1..=5 => BETA_TABLE[bits as usize - 1],
        _ => HIGH_RES_COEFFICIENT * 2f64.powi(-2 * bits as i32),
    }
}

/// Quantization gain `1 - beta(b)`.
pub fn alpha(bits: u32) -> f64 {
    1.0 - beta(bits)
}

/// Relaxed MSQE model `(pi sqrt(3)/2) sigma2 2^(-2b)`, valid for any real `b`.
///
/// This is the optimizer's objective; at `b = 0` it exceeds `sigma2`, which
/// is expected for the relaxed form.
pub fn msqe(bits: f64, sigma2_x: f64) -> f64 {
    HIGH_RES_COEFFICIENT * sigma2_x * (-2.0 * bits).exp2()
}

/// Diagonal of the quantization-noise covariance for a fixed channel:
/// `alpha_i beta_i (p_u ||[H_b]_i||^2 + 1)`.
pub fn quantization_noise_covariance(
    h_b: &DMatrix<Complex64>,
    bits: &[u32],
    p_u: f64,
) -> Result<Vec<f64>> {
    check_len(h_b.nrows(), bits.len())?;
    Ok(row_energies(h_b)
        .iter()
        .zip(bits)
        .map(|(e, &b)| alpha(b) * beta(b) * (p_u * e + 1.0))
        .collect())
}

/// Draws one AQNM output `W_alpha y + n_q` for a received vector `y`.
pub fn apply_aqnm<R: Rng + ?Sized>(
    y: &[Complex64],
    bits: &[u32],
    h_b: &DMatrix<Complex64>,
    p_u: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_len(bits.len(), y.len())?;
    let cov = quantization_noise_covariance(h_b, bits, p_u)?;
    Ok(y.iter()
        .zip(bits)
        .zip(&cov)
        .map(|((yi, &b), &var)| {
            let noise = if var > 0.0 {
                complex_gaussian(rng) * var.sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            };
            yi * alpha(b) + noise
        })
        .collect())
}
