//! Achievable average-transmission-rate bounds for variable-length
//! stop-feedback codes under a strict delay constraint, with a Monte Carlo
//! simulator of the underlying random-coding scheme.
//!
//! * [`channel`]: discrete memoryless channels, information density, capacity.
//! * [`bounds`]: the α-optimised ATR lower bound and its companions.
//! * [`sim`]: Monte Carlo and exhaustive evaluation of the coding scheme.
//! * [`cli`]: the `vlf` command-line front end.

pub mod bounds;
pub mod channel;
pub mod cli;
mod optimize;
pub mod rng;
pub mod sim;

pub use optimize::{golden_section_max, Maximum};

/// Nats to bits.
pub fn to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
