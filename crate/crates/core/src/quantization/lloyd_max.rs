//! Lloyd-Max scalar quantizer for a standard real Gaussian source.
//!
//! Cell probabilities and centroids are integrated exactly with the normal
//! CDF, so the design converges to the true MMSE quantizer rather than to a
//! sample-based approximation.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq)]
pub struct LloydMaxCodebook {
    pub bits: u32,
    /// Reconstruction levels, ascending.
    pub levels: Vec<f64>,
    /// Decision thresholds between adjacent levels (`levels.len() - 1` of them).
    pub thresholds: Vec<f64>,
    /// Exact normalized MSE for a unit-variance Gaussian input.
    pub distortion: f64,
    pub iterations: usize,
}

fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        INV_SQRT_2PI * (-0.5 * x * x).exp()
    }
}

/// Upper tail `P(X > x)`.
fn q(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `P(a < X < b)`, evaluated on whichever tail keeps precision.
fn mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        q(a) - q(b)
    } else {
        q(-b) - q(-a)
    }
}

fn x_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x * pdf(x)
    }
}

/// `E[(X - y)^2 ; a < X < b]`.
fn cell_error(a: f64, b: f64, y: f64) -> f64 {
    let p = mass(a, b);
    let m1 = pdf(a) - pdf(b);
    let m2 = p + x_pdf(a) - x_pdf(b);
    (m2 - 2.0 * y * m1 + y * y * p).max(0.0)
}

fn cell_edges(thresholds: &[f64], i: usize) -> (f64, f64) {
    let lo = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
    let hi = thresholds.get(i).copied().unwrap_or(f64::INFINITY);
    (lo, hi)
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Runs Lloyd's iteration for the `2^bits`-level MMSE quantizer until no
/// level moves by more than `tolerance`.
pub fn lloyd_max_codebook(bits: u32, max_iterations: usize, tolerance: f64) -> Result<LloydMaxCodebook> {
    if !(1..=8).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "Lloyd-Max design supports 1..=8 bits, got {bits}"
        )));
    }
    let n = 1usize << bits;
    // Start from the asymptotically optimal point density, which is N(0, 3).
    let compander = Normal::new(0.0, 3f64.sqrt()).expect("valid normal");
    let mut levels: Vec<f64> = (0..n)
        .map(|i| compander.inverse_cdf((i as f64 + 0.5) / n as f64))
        .collect();

    for iteration in 1..=max_iterations {
        let thresholds = midpoints(&levels);
        let mut shift = 0.0f64;
        for (i, level) in levels.iter_mut().enumerate() {
            let (a, b) = cell_edges(&thresholds, i);
            let centroid = (pdf(a) - pdf(b)) / mass(a, b);
            shift = shift.max((centroid - *level).abs());
            *level = centroid;
        }
        if shift < tolerance {
            let thresholds = midpoints(&levels);
            let distortion = levels
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let (a, b) = cell_edges(&thresholds, i);
                    cell_error(a, b, y)
                })
                .sum();
            return Ok(LloydMaxCodebook {
                bits,
                levels,
                thresholds,
                distortion,
                iterations: iteration,
            });
        }
    }
    Err(Error::NotConverged(max_iterations))
}

impl LloydMaxCodebook {
    pub fn quantize(&self, x: f64) -> f64 {
        self.levels[self.thresholds.partition_point(|t| *t < x)]
    }

    /// Monte Carlo distortion `sum (x - Q(x))^2 / sum x^2` over standard
    /// normal samples.
    pub fn empirical_distortion<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> f64 {
        let mut err = 0.0;
        let mut energy = 0.0;
        for _ in 0..samples {
            let x: f64 = StandardNormal.sample(rng);
            let e = x - self.quantize(x);
            err += e * e;
            energy += x * x;
        }
        err / energy
    }
}
