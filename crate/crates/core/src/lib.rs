//! ADC bit allocation for hybrid analog-digital mmWave massive-MIMO
//! receivers with resolution-adaptive ADCs.
//!
//! The crate covers the whole link-level chain:
//!
//! - [`channel`]: sparse beamspace channels and strongest-path analog combining,
//! - [`quantization`]: the additive quantization noise model and a Lloyd-Max reference,
//! - [`power`]: receiver power with ADC, switching, and RF-chain deactivation,
//! - [`allocator`]: the closed-form bit allocator with a binary search over active chains,
//! - [`switching`]: off-line estimation of the average switching power,
//! - [`link`]: MRC rates, energy efficiency, and the four-receiver comparison.
//!
//! All randomness flows through caller-owned [`SimRng`] streams, so every
//! result is reproducible from a seed.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod channel;
pub mod config;
pub mod error;
pub mod link;
pub mod power;
pub mod quantization;
pub mod switching;

use rand::SeedableRng;

pub use allocator::{allocate_bits, AllocationProblem, AllocationResult};
pub use channel::{BeamspaceChannel, UserGeometry};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use link::{Method, RateTerms, SweepResult};
pub use power::{BitAllocation, PowerBreakdown};
pub use switching::{LookupTable, PswFit, SwitchingPowerModel};

/// Random stream used throughout the simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Independent, reproducible stream `stream` derived from `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
