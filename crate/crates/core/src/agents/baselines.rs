//! Non-learning reference policies.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{decode_action, DecodedAction, Env, EnvConfig, SlotOutcome, Strategy};
use crate::rng::{stream, SimRng, Stream};
use crate::{Error, Result};

/// Uniform actions on `[-1, 1]^action_dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomPolicy {
    dim: usize,
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(action_dim: usize, seed: u64) -> Self {
        Self {
            dim: action_dim,
            rng: stream(seed, Stream::Baseline),
        }
    }

    pub fn act(&mut self) -> Vec<f64> {
        (0..self.dim)
            .map(|_| self.rng.random_range(-1.0..=1.0))
            .collect()
    }
}

/// Discretisation searched by [`exhaustive_search`], in physical units.
///
/// Powers are per-user levels (watts) and phases per-element levels
/// (radians); the assignment is enumerated in full: every element is either
/// idle or owned by one user under HERA, and owned by one user under TS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveGrid {
    pub tau: Vec<f64>,
    pub power_w: Vec<f64>,
    pub phase_rad: Vec<f64>,
}

impl ExhaustiveGrid {
    /// `levels` evenly spaced points on each raw axis: `τ` and `p` include
    /// both endpoints, phases cover `[0, 2π)`.
    pub fn uniform(
        config: &EnvConfig,
        tau_levels: usize,
        power_levels: usize,
        phase_levels: usize,
    ) -> Self {
        let span = |n: usize, hi: f64| -> Vec<f64> {
            match n {
                0 => Vec::new(),
                1 => vec![hi],
                _ => (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect(),
            }
        };
        Self {
            tau: span(tau_levels, 1.0),
            power_w: span(power_levels, config.p_user_max_w),
            phase_rad: (0..phase_levels)
                .map(|i| 2.0 * PI * i as f64 / phase_levels as f64)
                .collect(),
        }
    }

    fn owner_choices(config: &EnvConfig) -> usize {
        match config.strategy {
            Strategy::Hera => config.users + 1,
            Strategy::Ts => config.users,
        }
    }

    pub fn combinations(&self, config: &EnvConfig) -> u128 {
        let (k, l) = (config.users as u32, config.elements() as u32);
        let pow = |b: usize, e: u32| (b as u128).checked_pow(e).unwrap_or(u128::MAX);
        [
            self.tau.len() as u128,
            pow(self.power_w.len(), k),
            pow(self.phase_rad.len(), l),
            pow(Self::owner_choices(config), l),
        ]
        .iter()
        .fold(1u128, |acc, &x| acc.saturating_mul(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub raw_action: Vec<f64>,
    pub action: DecodedAction,
    pub outcome: SlotOutcome,
    pub combinations: u128,
    pub grid: ExhaustiveGrid,
}

/// Rewards closer than this count as tied, so rounding noise cannot reorder
/// points that are equal in exact arithmetic.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Increments a mixed-radix counter; false once it wraps.
fn advance(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Raw action that decodes to the given grid point.
pub fn encode_point(
    config: &EnvConfig,
    tau: f64,
    powers: &[f64],
    phases: &[f64],
    owners: &[Option<usize>],
) -> Vec<f64> {
    let (k, l) = (config.users, config.elements());
    let mut raw = Vec::with_capacity(config.action_dim());
    raw.push(2.0 * tau - 1.0);
    raw.extend(powers.iter().map(|p| 2.0 * p / config.p_user_max_w - 1.0));
    raw.extend(phases.iter().map(|t| t / PI - 1.0));
    for u in 0..k {
        raw.extend((0..l).map(|e| if owners[e] == Some(u) { 1.0 } else { -1.0 }));
    }
    raw
}

/// Scores every grid point on the environment's current (frozen) slot and
/// returns the first best one in enumeration order (see [`TIE_TOLERANCE`]).
///
/// Enumeration order, outermost first: `τ`, powers, phases, assignment; each
/// multi-digit axis counts with user or element 0 as the fastest digit.
pub fn exhaustive_search(
    env: &Env,
    grid: &ExhaustiveGrid,
    budget: u128,
) -> Result<ExhaustiveResult> {
    let config = env.config();
    let combinations = grid.combinations(config);
    if combinations > budget {
        return Err(Error::BudgetExceeded {
            combinations,
            budget,
        });
    }
    if combinations == 0 {
        return Err(Error::config("grid", "every axis needs at least one level"));
    }
    let (k, l) = (config.users, config.elements());
    let owner_choices = ExhaustiveGrid::owner_choices(config);
    let to_owner = |d: usize| match config.strategy {
        Strategy::Ts => Some(d),
        Strategy::Hera => d.checked_sub(1),
    };

    let mut best: Option<(f64, Vec<f64>, DecodedAction, SlotOutcome)> = None;
    for &tau in &grid.tau {
        let mut p_idx = vec![0usize; k];
        loop {
            let powers: Vec<f64> = p_idx.iter().map(|&i| grid.power_w[i]).collect();
            let mut th_idx = vec![0usize; l];
            loop {
                let phases: Vec<f64> = th_idx.iter().map(|&i| grid.phase_rad[i]).collect();
                let mut b_idx = vec![0usize; l];
                loop {
                    let owners: Vec<Option<usize>> = b_idx.iter().map(|&d| to_owner(d)).collect();
                    let raw = encode_point(config, tau, &powers, &phases, &owners);
                    let action = decode_action(&raw, config)?;
                    let outcome = env.evaluate(&action)?;
                    if best
                        .as_ref()
                        .is_none_or(|(r, ..)| outcome.reward > *r + TIE_TOLERANCE)
                    {
                        best = Some((outcome.reward, raw, action, outcome));
                    }
                    if !advance(&mut b_idx, owner_choices) {
                        break;
                    }
                }
                if !advance(&mut th_idx, grid.phase_rad.len()) {
                    break;
                }
            }
            if !advance(&mut p_idx, grid.power_w.len()) {
                break;
            }
        }
    }
    let (_, raw_action, action, outcome) =
        best.ok_or_else(|| Error::config("grid", "empty grid"))?;
    Ok(ExhaustiveResult {
        raw_action,
        action,
        outcome,
        combinations,
        grid: grid.clone(),
    })
}
