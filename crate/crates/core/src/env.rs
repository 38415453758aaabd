//! Slotted decision process around the UAV-RIS system.
//!
//! Each slot the controller observes the *estimated* channels, node
//! positions, the renewable arrival and its previous action, then picks the
//! harvesting split `τ`, per-user BS powers, RIS phases and the
//! element-to-user assignment. The slot is scored on the true channels: the
//! reward is the EH efficiency when every checked constraint holds and zero
//! otherwise.
//!
//! Constraint handling: ranges of `τ`, powers, phases and the one-owner rule
//! for elements hold by construction of [`decode_action`]; the minimum rate
//! and energy causality are checked after the fact; battery overflow is a
//! clamp.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{sample_channels, ChannelParams, ChannelState, PathLossParams};
use crate::energy::{
    per_element_incident, slot_harvest_hera, slot_harvest_ts, EnergyLedger, HarvesterParams,
    RenewableSource, SignalCovariance, SlotEnergyReport,
};
use crate::geometry::{kmeans_place_uav, Arena, GridSpec, Layout, MobilityModel, Position3D};
use crate::link::{
    link_report, max_ratio_direction, AssignmentMatrix, LinkReport, Precoder, ReflectionConfig,
};
use crate::math::dbm_to_watts;
use crate::rng::{stream, SimRng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Time switching: every element harvests, then every element reflects.
    Ts,
    /// Hybrid: every element harvests, then unassigned elements keep harvesting.
    Hera,
}

impl core::fmt::Display for Strategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Strategy::Ts => "ts",
            Strategy::Hera => "hera",
        })
    }
}

impl core::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ts" => Ok(Strategy::Ts),
            "hera" => Ok(Strategy::Hera),
            other => Err(Error::config(
                "strategy",
                alloc::format!("unknown strategy `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// BS antennas `A`.
    pub antennas: usize,
    /// Users `K`.
    pub users: usize,
    /// RIS rows `M`.
    pub ris_rows: usize,
    /// RIS columns `N`.
    pub ris_cols: usize,
    pub strategy: Strategy,
    pub renewable_enabled: bool,
    /// CSI error standard deviation `ζ`.
    pub csi_error_std: f64,
    pub csi_error_bs_ris: bool,
    pub csi_error_ris_user: bool,
    /// Hardware-impairment level `ψ`.
    pub hi_level: f64,
    pub noise_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub r_min_bps: f64,
    pub p_bs_max_w: f64,
    pub p_user_max_w: f64,
    pub pathloss: PathLossParams,
    pub wavelength_m: f64,
    pub harvester: HarvesterParams,
    pub slot_seconds: f64,
    /// Largest single renewable arrival, joules.
    pub re_mu_j: f64,
    /// Renewable arrival rate, per second.
    pub re_lambda_per_s: f64,
    pub battery_capacity_j: f64,
    pub battery_initial_fraction: f64,
    pub p_hover_w: f64,
    pub p_element_w: f64,
    pub episode_length: usize,
    pub arena: Arena,
    pub uav_altitude_m: f64,
    pub user_height_m: f64,
    pub element_spacing_m: f64,
    pub user_speed_m_per_slot: f64,
    pub kmeans_iterations: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            antennas: 4,
            users: 1,
            ris_rows: 4,
            ris_cols: 4,
            strategy: Strategy::Hera,
            renewable_enabled: true,
            csi_error_std: 0.0,
            csi_error_bs_ris: true,
            csi_error_ris_user: true,
            hi_level: 0.0,
            noise_power_dbm: -102.0,
            bandwidth_hz: 10e6,
            r_min_bps: 70e6,
            p_bs_max_w: 500.0,
            p_user_max_w: 500.0,
            pathloss: PathLossParams::default(),
            wavelength_m: 0.1,
            harvester: HarvesterParams::default(),
            slot_seconds: 1.0,
            re_mu_j: 0.05,
            re_lambda_per_s: 1.0,
            battery_capacity_j: 1000.0,
            battery_initial_fraction: 0.5,
            p_hover_w: 0.0,
            p_element_w: 1e-3,
            episode_length: 100,
            arena: Arena {
                x_min: 30.0,
                y_min: -10.0,
                width: 20.0,
                height: 20.0,
            },
            uav_altitude_m: 20.0,
            user_height_m: 1.5,
            element_spacing_m: 0.05,
            user_speed_m_per_slot: 1.0,
            kmeans_iterations: 10,
        }
    }
}

impl EnvConfig {
    pub fn elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    pub fn action_dim(&self) -> usize {
        1 + self.users + self.elements() + self.users * self.elements()
    }

    pub fn state_dim(&self) -> usize {
        let (a, k, l) = (self.antennas, self.users, self.elements());
        2 * a * l + 2 * k * l + 3 * l + 3 * k + 1 + self.action_dim()
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            pathloss: self.pathloss,
            wavelength: self.wavelength_m,
            csi_error_std: self.csi_error_std,
            csi_error_bs_ris: self.csi_error_bs_ris,
            csi_error_ris_user: self.csi_error_ris_user,
            hi_level: self.hi_level,
            noise_power: self.noise_power_w(),
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            rows: self.ris_rows,
            cols: self.ris_cols,
            element_spacing: self.element_spacing_m,
            uav_altitude: self.uav_altitude_m,
            user_height: self.user_height_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, field: &'static str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, "must be positive and finite"))
            }
        };
        let non_negative = |v: f64, field: &'static str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, "must be non-negative and finite"))
            }
        };
        if self.antennas == 0 {
            return Err(Error::config("antennas", "must be >= 1"));
        }
        if self.users == 0 {
            return Err(Error::config("users", "must be >= 1"));
        }
        if self.ris_rows == 0 || self.ris_cols == 0 {
            return Err(Error::config("ris_rows", "RIS needs at least one element"));
        }
        if self.episode_length == 0 {
            return Err(Error::config("episode_length", "must be >= 1"));
        }
        non_negative(self.csi_error_std, "csi_error_std")?;
        non_negative(self.hi_level, "hi_level")?;
        positive(self.bandwidth_hz, "bandwidth_hz")?;
        non_negative(self.r_min_bps, "r_min_bps")?;
        positive(self.p_bs_max_w, "p_bs_max_w")?;
        positive(self.p_user_max_w, "p_user_max_w")?;
        positive(self.wavelength_m, "wavelength_m")?;
        positive(self.slot_seconds, "slot_seconds")?;
        non_negative(self.re_mu_j, "re_mu_j")?;
        non_negative(self.re_lambda_per_s, "re_lambda_per_s")?;
        positive(self.battery_capacity_j, "battery_capacity_j")?;
        if !(0.0..=1.0).contains(&self.battery_initial_fraction) {
            return Err(Error::config(
                "battery_initial_fraction",
                "must lie in [0, 1]",
            ));
        }
        non_negative(self.p_hover_w, "p_hover_w")?;
        non_negative(self.p_element_w, "p_element_w")?;
        positive(self.arena.width, "arena.width")?;
        positive(self.arena.height, "arena.height")?;
        non_negative(self.uav_altitude_m, "uav_altitude_m")?;
        non_negative(self.user_height_m, "user_height_m")?;
        non_negative(self.element_spacing_m, "element_spacing_m")?;
        non_negative(self.user_speed_m_per_slot, "user_speed_m_per_slot")?;
        if !self.noise_power_dbm.is_finite() {
            return Err(Error::config("noise_power_dbm", "must be finite"));
        }
        self.pathloss.validate()?;
        self.harvester.validate()?;
        Ok(())
    }
}

/// Structured form of a raw action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedAction {
    pub tau: f64,
    pub powers: Vec<f64>,
    pub phases: Vec<f64>,
    pub assignment: AssignmentMatrix,
    /// Raw components that fell outside `[-1, 1]` (or were not finite).
    pub clipped: usize,
}

impl DecodedAction {
    /// `[τ, p_1..p_K, θ_1..θ_L, β (K×L row-major)]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(
            1 + self.powers.len()
                + self.phases.len()
                + self.assignment.users() * self.assignment.elements(),
        );
        out.push(self.tau);
        out.extend_from_slice(&self.powers);
        out.extend_from_slice(&self.phases);
        out.extend(self.assignment.as_f64());
        out
    }
}

fn unit(x: f64) -> f64 {
    (x + 1.0) / 2.0
}

/// Maps a raw vector in `[-1, 1]^action_dim` onto a feasible structured action.
///
/// Layout of `raw`: `[τ, p_1..p_K, θ_1..θ_L, logits (K×L row-major)]`.
/// Each element goes to the user with the largest logit when that logit's
/// sigmoid is at least one half; under TS every element reflects, so the
/// threshold is skipped.
pub fn decode_action(raw: &[f64], config: &EnvConfig) -> Result<DecodedAction> {
    let (k, l) = (config.users, config.elements());
    if raw.len() != config.action_dim() {
        return Err(Error::shape(alloc::format!(
            "action of length {} for action_dim {}",
            raw.len(),
            config.action_dim()
        )));
    }
    let mut clipped = 0;
    let x: Vec<f64> = raw
        .iter()
        .map(|&v| {
            if !v.is_finite() {
                clipped += 1;
                0.0
            } else if !(-1.0..=1.0).contains(&v) {
                clipped += 1;
                v.clamp(-1.0, 1.0)
            } else {
                v
            }
        })
        .collect();

    let tau = unit(x[0]).clamp(0.0, 1.0);
    let mut powers: Vec<f64> = x[1..1 + k]
        .iter()
        .map(|&v| (unit(v) * config.p_user_max_w).clamp(0.0, config.p_user_max_w))
        .collect();
    let total: f64 = powers.iter().sum();
    if total > config.p_bs_max_w {
        let s = config.p_bs_max_w / total;
        powers.iter_mut().for_each(|p| *p *= s);
    }
    let phases: Vec<f64> = x[1 + k..1 + k + l]
        .iter()
        .map(|&v| ((v + 1.0) * PI).clamp(0.0, 2.0 * PI))
        .collect();

    let logits = &x[1 + k + l..];
    let owners: Vec<Option<usize>> = (0..l)
        .map(|e| {
            let mut best = 0;
            for u in 1..k {
                if logits[u * l + e] > logits[best * l + e] {
                    best = u;
                }
            }
            let keep = config.strategy == Strategy::Ts || sigmoid(logits[best * l + e]) >= 0.5;
            keep.then_some(best)
        })
        .collect();
    let assignment = AssignmentMatrix::from_owners(k, &owners)?;

    Ok(DecodedAction {
        tau,
        powers,
        phases,
        assignment,
        clipped,
    })
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Flat observation vector; see [`EnvConfig::state_dim`] for the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Minimum-rate constraint missed by `user`.
    Qos { user: usize, rate_bps: f64 },
    /// Consumption exceeded stored plus harvested energy.
    EnergyCausality { shortfall_j: f64 },
    /// Nothing reached the RIS, so efficiency is undefined.
    NoIncidentEnergy,
}

/// Everything computed for one slot under a fixed action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub reward: f64,
    pub efficiency: f64,
    pub energy: SlotEnergyReport,
    pub link: LinkReport,
    pub violations: Vec<Violation>,
    pub battery_after: f64,
}

impl SlotOutcome {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub slot: SlotOutcome,
    pub action: DecodedAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Env {
    config: EnvConfig,
    layout: Layout,
    mobility: MobilityModel,
    fading: SimRng,
    estimation: SimRng,
    renewable: RenewableSource,
    channels: ChannelState,
    renewable_now: f64,
    ledger: EnergyLedger,
    prev_action: Vec<f64>,
    slot: usize,
    done: bool,
}

impl Env {
    /// Builds and resets an environment.
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut layout_rng = stream(seed, Stream::Layout);
        let users: Vec<[f64; 2]> = (0..config.users)
            .map(|_| config.arena.sample(&mut layout_rng))
            .collect();
        let uav = kmeans_place_uav(&users, config.kmeans_iterations)?;
        let layout = Layout::new(Position3D::origin(), uav, &users, config.grid())?;
        let mobility = MobilityModel::new(
            config.arena,
            config.user_speed_m_per_slot,
            config.users,
            stream(seed, Stream::Mobility),
        );
        let mut fading = stream(seed, Stream::Fading);
        let mut estimation = stream(seed, Stream::CsiError);
        let channels = sample_channels(
            &layout,
            &config.channel_params(),
            config.antennas,
            &mut fading,
            &mut estimation,
        )?;
        let mut renewable = RenewableSource::new(
            config.re_mu_j,
            config.re_lambda_per_s,
            stream(seed, Stream::Renewable),
        );
        let renewable_now = Self::draw_renewable(&config, &mut renewable);
        let ledger = EnergyLedger::new(
            config.battery_capacity_j,
            config.battery_capacity_j * config.battery_initial_fraction,
        )?;
        let prev_action = vec![0.0; config.action_dim()];
        Ok(Self {
            config,
            layout,
            mobility,
            fading,
            estimation,
            renewable,
            channels,
            renewable_now,
            ledger,
            prev_action,
            slot: 0,
            done: false,
        })
    }

    /// Restarts the episode from `seed`, returning the first observation.
    pub fn reset(&mut self, seed: u64) -> Result<StateVector> {
        *self = Self::new(self.config.clone(), seed)?;
        Ok(self.state())
    }

    // The source is always sampled so that disabling it keeps every other
    // stream aligned.
    fn draw_renewable(config: &EnvConfig, source: &mut RenewableSource) -> f64 {
        let e = source.sample(config.slot_seconds);
        if config.renewable_enabled {
            e
        } else {
            0.0
        }
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn channels(&self) -> &ChannelState {
        &self.channels
    }

    pub fn renewable_now(&self) -> f64 {
        self.renewable_now
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn state(&self) -> StateVector {
        let mut s = Vec::with_capacity(self.config.state_dim());
        for m in [&self.channels.g1_est, &self.channels.g_ru_est] {
            s.extend(m.as_slice().iter().map(|z| z.re));
            s.extend(m.as_slice().iter().map(|z| z.im));
        }
        for p in self.layout.ris_elements.iter().chain(&self.layout.users) {
            s.extend_from_slice(&p.to_array());
        }
        s.push(self.renewable_now);
        s.extend_from_slice(&self.prev_action);
        StateVector(s)
    }

    /// Precoder for `action`: maximum-ratio directions from the estimated
    /// channels, scaled to the decoded powers.
    pub fn precoder(&self, action: &DecodedAction) -> Result<Precoder> {
        let reflection = ReflectionConfig::new(action.phases.clone());
        let directions = (0..self.config.users)
            .map(|k| max_ratio_direction(&self.channels, &reflection, &action.assignment, k, true))
            .collect::<Result<Vec<_>>>()?;
        Precoder::from_directions(directions, &action.powers)
    }

    /// Scores `action` on the current slot without advancing anything.
    pub fn evaluate(&self, action: &DecodedAction) -> Result<SlotOutcome> {
        let cfg = &self.config;
        let reflection = ReflectionConfig::new(action.phases.clone());
        let precoder = self.precoder(action)?;
        let cov = SignalCovariance::from_precoder(&precoder);
        let per_element = per_element_incident(&self.channels.g1_true, &cov)?;
        let incident_power: f64 = per_element.iter().sum();

        let energy = match cfg.strategy {
            Strategy::Ts => slot_harvest_ts(
                action.tau,
                incident_power,
                self.renewable_now,
                cfg.slot_seconds,
                &cfg.harvester,
            ),
            Strategy::Hera => slot_harvest_hera(
                action.tau,
                &per_element,
                &action.assignment,
                self.renewable_now,
                cfg.slot_seconds,
                &cfg.harvester,
            )?,
        };
        let reflecting = match cfg.strategy {
            Strategy::Ts => cfg.elements(),
            Strategy::Hera => action.assignment.assigned_count(),
        };
        let consumed = (cfg.p_hover_w + reflecting as f64 * cfg.p_element_w) * cfg.slot_seconds;
        let energy = energy.with_consumption(consumed);

        let link = link_report(
            &self.channels,
            &reflection,
            &action.assignment,
            &precoder,
            action.tau,
            cfg.bandwidth_hz,
        )?;

        let mut violations = Vec::new();
        for (user, &rate) in link.rate.iter().enumerate() {
            if rate < cfg.r_min_bps {
                violations.push(Violation::Qos {
                    user,
                    rate_bps: rate,
                });
            }
        }
        let battery = self.ledger.update(energy.harvested(), consumed);
        if let Some(shortfall_j) = battery.shortfall {
            violations.push(Violation::EnergyCausality { shortfall_j });
        }
        if !(energy.incident > 0.0) {
            violations.push(Violation::NoIncidentEnergy);
        }
        let reward = if violations.is_empty() {
            energy.efficiency
        } else {
            0.0
        };
        Ok(SlotOutcome {
            reward,
            efficiency: energy.efficiency,
            energy,
            link,
            violations,
            battery_after: battery.ledger.battery,
        })
    }

    pub fn step(&mut self, raw_action: &[f64]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        let action = decode_action(raw_action, &self.config)?;
        let outcome = self.evaluate(&action)?;

        let mut ledger = self
            .ledger
            .update(outcome.energy.harvested(), outcome.energy.consumed)
            .ledger;
        ledger.last_incident = outcome.energy.incident;
        self.ledger = ledger;
        self.prev_action = action.flatten();
        self.slot += 1;
        self.done = self.slot >= self.config.episode_length;
        self.advance()?;

        Ok(StepOutcome {
            reward: outcome.reward,
            next_state: self.state(),
            done: self.done,
            info: StepInfo {
                slot: outcome,
                action,
            },
        })
    }

    /// Moves users, re-places the UAV, and draws the next slot's channels and
    /// renewable arrival.
    fn advance(&mut self) -> Result<()> {
        let moved = self.mobility.step_users(&self.layout);
        let uav = kmeans_place_uav(&moved.user_points(), self.config.kmeans_iterations)?;
        self.layout = moved.with_uav_at(uav);
        self.channels = sample_channels(
            &self.layout,
            &self.config.channel_params(),
            self.config.antennas,
            &mut self.fading,
            &mut self.estimation,
        )?;
        self.renewable_now = Self::draw_renewable(&self.config, &mut self.renewable);
        Ok(())
    }

    /// Advances the world without taking a decision; used to draw
    /// independent frozen slots for evaluation baselines.
    pub fn skip_slot(&mut self) -> Result<()> {
        self.advance()
    }
}
