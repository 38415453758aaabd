//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream derived from
//! the run seed, so toggling one feature (say, CSI error) never shifts the
//! draws seen by another (say, fading).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::Complex;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Layout = 1,
    Mobility = 2,
    Fading = 3,
    CsiError = 4,
    Renewable = 5,
    AgentInit = 16,
    Exploration = 17,
    Replay = 18,
    TargetNoise = 19,
    Baseline = 20,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Circularly-symmetric complex Gaussian with the given total variance.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex {
    let s = libm::sqrt(variance / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * std_dev
}
