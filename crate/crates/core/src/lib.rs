//! Simulation and learning core for a UAV-mounted reconfigurable intelligent
//! surface (RIS) that harvests RF and renewable energy while relaying a
//! multi-antenna base station to mobile single-antenna users.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, a clock, or a command line lives in the harness crate.
//!
//! Module map:
//! - [`geometry`]: positions, user mobility, K-means UAV placement.
//! - [`channel`]: air-to-ground path loss, Rayleigh/Rician fading, CSI error.
//! - [`energy`]: non-linear rectifier, renewable arrivals, TS and HERA slot
//!   accounting, battery.
//! - [`link`]: precoding, RIS cascade, SNR with hardware impairments, rates.
//! - [`env`]: the slotted decision process (state, action decoding, reward).
//! - [`agents`]: dense networks, replay, DDPG, TD3, EE-DDPG and baselines.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod agents;
pub mod channel;
pub mod energy;
pub mod env;
mod error;
pub mod geometry;
pub mod link;
pub mod math;
pub mod rng;

pub use error::{Error, Result};
