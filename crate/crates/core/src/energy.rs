//! Energy side of the UAV-RIS unit: the sigmoid rectifier model, renewable
//! arrivals, per-slot accounting for the time-switching (TS) and hybrid
//! (HERA) strategies, and the battery.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use alloc::vec::Vec;

use crate::channel::ChannelState;
use crate::link::{AssignmentMatrix, Precoder};
use crate::math::{CMatrix, Complex};
use crate::rng::SimRng;
use crate::{Error, Result};

/// Logistic rectifier: saturates at `p_sat`, knee at `d`, steepness `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarvesterParams {
    pub p_sat: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for HarvesterParams {
    fn default() -> Self {
        Self {
            p_sat: 0.024,
            c: 150.0,
            d: 0.014,
        }
    }
}

impl HarvesterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_sat > 0.0) {
            return Err(Error::config("harvester.p_sat", "must be > 0"));
        }
        if !(self.c > 0.0) {
            return Err(Error::config("harvester.c", "must be > 0"));
        }
        if !(self.d >= 0.0) {
            return Err(Error::config("harvester.d", "must be >= 0"));
        }
        Ok(())
    }
}

/// Harvested DC power for an RF input of `p_rf` watts.
///
/// The logistic curve is shifted and rescaled so that zero input yields zero
/// output; the result lies in `[0, p_sat]`.
pub fn nonlinear_harvest(p_rf: f64, params: &HarvesterParams) -> f64 {
    let p_rf = p_rf.max(0.0);
    let omega = params.p_sat / (1.0 + libm::exp(-params.c * (p_rf - params.d)));
    let delta = 1.0 / (1.0 + libm::exp(params.c * params.d));
    ((omega - params.p_sat * delta) / (1.0 - delta)).clamp(0.0, params.p_sat)
}

/// Compound-Poisson renewable source: `Poisson(λ·T)` arrivals per slot, each
/// carrying `Uniform(0, μ)` joules.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenewableSource {
    pub mu: f64,
    pub lambda: f64,
    rng: SimRng,
}

impl RenewableSource {
    pub fn new(mu: f64, lambda: f64, rng: SimRng) -> Self {
        Self { mu, lambda, rng }
    }

    pub fn sample(&mut self, slot_seconds: f64) -> f64 {
        let rate = self.lambda * slot_seconds;
        if !(rate > 0.0) || !(self.mu > 0.0) {
            return 0.0;
        }
        let arrivals: f64 = match Poisson::new(rate) {
            Ok(p) => p.sample(&mut self.rng),
            Err(_) => return 0.0,
        };
        (0..arrivals as u64)
            .map(|_| self.mu * self.rng.random::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotEnergyReport {
    pub rf_harvested: f64,
    pub re_harvested: f64,
    pub consumed: f64,
    pub incident: f64,
    pub efficiency: f64,
}

impl SlotEnergyReport {
    fn new(rf_harvested: f64, re_harvested: f64, incident: f64) -> Self {
        let efficiency = if incident > 0.0 {
            (rf_harvested + re_harvested) / incident
        } else {
            0.0
        };
        Self {
            rf_harvested,
            re_harvested,
            consumed: 0.0,
            incident,
            efficiency,
        }
    }

    pub fn harvested(&self) -> f64 {
        self.rf_harvested + self.re_harvested
    }

    pub fn with_consumption(mut self, consumed: f64) -> Self {
        self.consumed = consumed;
        self
    }
}

/// Time switching: all elements harvest for `tau`, all reflect for `1 - tau`.
pub fn slot_harvest_ts(
    tau: f64,
    p_rf_total: f64,
    re_joules: f64,
    slot_seconds: f64,
    params: &HarvesterParams,
) -> SlotEnergyReport {
    let rf = nonlinear_harvest(p_rf_total, params) * tau * slot_seconds;
    SlotEnergyReport::new(rf, re_joules, p_rf_total * slot_seconds)
}

/// HERA: the full array harvests for `tau`; for the remaining `1 - tau`, the
/// elements not assigned to any user keep feeding the rectifier.
///
/// One rectifier serves the whole array, so the non-linearity is applied to
/// the summed input power of whichever elements harvest in each phase.
pub fn slot_harvest_hera(
    tau: f64,
    per_element_rf: &[f64],
    beta: &AssignmentMatrix,
    re_joules: f64,
    slot_seconds: f64,
    params: &HarvesterParams,
) -> Result<SlotEnergyReport> {
    if per_element_rf.len() != beta.elements() {
        return Err(Error::shape(alloc::format!(
            "{} per-element powers for {} assignment columns",
            per_element_rf.len(),
            beta.elements()
        )));
    }
    beta.validate()?;
    let total: f64 = per_element_rf.iter().sum();
    let idle: f64 = per_element_rf
        .iter()
        .enumerate()
        .filter(|(l, _)| beta.owner(*l).is_none())
        .map(|(_, p)| p)
        .sum();
    let rf = (tau * nonlinear_harvest(total, params)
        + (1.0 - tau) * nonlinear_harvest(idle, params))
        * slot_seconds;
    Ok(SlotEnergyReport::new(rf, re_joules, total * slot_seconds))
}

/// Transmit covariance `Cov(S) = Σ_k V_k V_kᴴ` (`A × A`).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCovariance(CMatrix);

impl SignalCovariance {
    pub fn from_precoder(precoder: &Precoder) -> Self {
        let a = precoder.antennas();
        let mut cov = CMatrix::zeros(a, a);
        for v in &precoder.vectors {
            for i in 0..a {
                for j in 0..a {
                    cov.set(i, j, cov.get(i, j) + v[i] * v[j].conj());
                }
            }
        }
        Self(cov)
    }

    /// Uncorrelated antennas each radiating `watts_per_antenna`.
    pub fn isotropic(antennas: usize, watts_per_antenna: f64) -> Self {
        let mut cov = CMatrix::zeros(antennas, antennas);
        for i in 0..antennas {
            cov.set(i, i, Complex::new(watts_per_antenna, 0.0));
        }
        Self(cov)
    }

    pub fn antennas(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Mean received power `g_lᴴ Cov(S) g_l` at every RIS element.
pub fn per_element_incident(g1: &CMatrix, cov: &SignalCovariance) -> Result<Vec<f64>> {
    if g1.rows() != cov.antennas() {
        return Err(Error::shape(alloc::format!(
            "{}-antenna channel with {}-antenna covariance",
            g1.rows(),
            cov.antennas()
        )));
    }
    let a = g1.rows();
    Ok((0..g1.cols())
        .map(|l| {
            let g: Vec<Complex> = g1.column(l).collect();
            let mut acc = Complex::new(0.0, 0.0);
            for i in 0..a {
                for j in 0..a {
                    acc += g[i].conj() * cov.0.get(i, j) * g[j];
                }
            }
            acc.re.max(0.0)
        })
        .collect())
}

/// Total RF power incident on the RIS, from the true BS→RIS channel.
pub fn incident_rf_power(channels: &ChannelState, cov: &SignalCovariance) -> Result<f64> {
    Ok(per_element_incident(&channels.g1_true, cov)?.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub battery: f64,
    pub capacity: f64,
    pub last_harvested: f64,
    pub last_consumed: f64,
    pub last_incident: f64,
}

/// Result of a battery update. `shortfall` is set when the slot tried to
/// consume more than was stored plus harvested; the consumption is then not
/// drawn and the battery only receives the harvest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryUpdate {
    pub ledger: EnergyLedger,
    pub shortfall: Option<f64>,
}

impl BatteryUpdate {
    pub fn is_feasible(&self) -> bool {
        self.shortfall.is_none()
    }
}

impl EnergyLedger {
    pub fn new(capacity: f64, battery: f64) -> Result<Self> {
        if !(capacity > 0.0) {
            return Err(Error::config("battery_capacity_j", "must be > 0"));
        }
        if !(0.0..=capacity).contains(&battery) {
            return Err(Error::config(
                "battery_initial_fraction",
                "initial level outside [0, capacity]",
            ));
        }
        Ok(Self {
            battery,
            capacity,
            last_harvested: 0.0,
            last_consumed: 0.0,
            last_incident: 0.0,
        })
    }

    pub fn update(&self, harvested: f64, consumed: f64) -> BatteryUpdate {
        let harvested = harvested.max(0.0);
        let consumed = consumed.max(0.0);
        let available = self.battery + harvested;
        let mut next = *self;
        next.last_harvested = harvested;
        if available < consumed {
            next.battery = available.min(self.capacity);
            next.last_consumed = 0.0;
            BatteryUpdate {
                ledger: next,
                shortfall: Some(consumed - available),
            }
        } else {
            next.battery = (available - consumed).min(self.capacity);
            next.last_consumed = consumed;
            BatteryUpdate {
                ledger: next,
                shortfall: None,
            }
        }
    }
}

pub fn update_battery(ledger: &EnergyLedger, harvested: f64, consumed: f64) -> BatteryUpdate {
    ledger.update(harvested, consumed)
}
