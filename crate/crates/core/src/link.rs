//! Information link: precoding at the BS, the RIS reflection with per-element
//! user assignment, SNR under hardware impairments, and Shannon rates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::math::{norm_sqr, Complex};
use crate::{Error, Result};

/// Binary `K × L` element-to-user assignment. An element belongs to at most
/// one user; unassigned elements harvest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    users: usize,
    elements: usize,
    entries: Vec<bool>,
}

impl AssignmentMatrix {
    pub fn new(users: usize, elements: usize, entries: Vec<bool>) -> Result<Self> {
        if entries.len() != users * elements {
            return Err(Error::shape(format!(
                "{} entries for a {users}x{elements} assignment",
                entries.len()
            )));
        }
        let m = Self {
            users,
            elements,
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn empty(users: usize, elements: usize) -> Self {
        Self {
            users,
            elements,
            entries: vec![false; users * elements],
        }
    }

    pub fn from_owners(users: usize, owners: &[Option<usize>]) -> Result<Self> {
        let mut m = Self::empty(users, owners.len());
        for (l, owner) in owners.iter().enumerate() {
            if let Some(k) = *owner {
                if k >= users {
                    return Err(Error::shape(format!(
                        "element {l} assigned to user {k} of {users}"
                    )));
                }
                m.entries[k * owners.len() + l] = true;
            }
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for l in 0..self.elements {
            let owners = (0..self.users).filter(|&k| self.get(k, l)).count();
            if owners > 1 {
                return Err(Error::AssignmentOverlap { element: l, owners });
            }
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn get(&self, user: usize, element: usize) -> bool {
        self.entries[user * self.elements + element]
    }

    pub fn owner(&self, element: usize) -> Option<usize> {
        (0..self.users).find(|&k| self.get(k, element))
    }

    pub fn assigned_count(&self) -> usize {
        self.entries.iter().filter(|&&b| b).count()
    }

    pub fn user_count(&self, user: usize) -> usize {
        (0..self.elements).filter(|&l| self.get(user, l)).count()
    }

    /// Row-major `K × L` entries as 0/1.
    pub fn as_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|&b| if b { 1.0 } else { 0.0 })
    }
}

/// RIS phase shifts; every element reflects with unit amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionConfig {
    pub phases: Vec<f64>,
}

impl ReflectionConfig {
    pub fn new(phases: Vec<f64>) -> Self {
        Self { phases }
    }

    pub fn coefficient(&self, l: usize) -> Complex {
        Complex::from_polar(1.0, self.phases[l])
    }
}

/// Per-user precoding vectors `V_k` with `‖V_k‖² = p_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    pub vectors: Vec<Vec<Complex>>,
    pub powers: Vec<f64>,
}

impl Precoder {
    /// Scales each unit-norm direction by `√p_k`.
    pub fn from_directions(directions: Vec<Vec<Complex>>, powers: &[f64]) -> Result<Self> {
        if directions.len() != powers.len() {
            return Err(Error::shape(format!(
                "{} directions for {} powers",
                directions.len(),
                powers.len()
            )));
        }
        let vectors = directions
            .into_iter()
            .zip(powers)
            .map(|(dir, &p)| {
                let n = libm::sqrt(norm_sqr(&dir));
                let s = if n > 0.0 {
                    libm::sqrt(p.max(0.0)) / n
                } else {
                    0.0
                };
                dir.into_iter().map(|z| z * s).collect()
            })
            .collect();
        Ok(Self {
            vectors,
            powers: powers.to_vec(),
        })
    }

    pub fn antennas(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn within_limits(&self, p_user_max: f64, p_bs_max: f64) -> bool {
        let tol = 1e-9 * p_bs_max.max(1.0);
        self.powers
            .iter()
            .all(|&p| p >= 0.0 && p <= p_user_max + tol)
            && self.total_power() <= p_bs_max + tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub snr: Vec<f64>,
    pub rate: Vec<f64>,
    pub effective_gain: Vec<Complex>,
}

fn check_shapes(
    channels: &ChannelState,
    reflection: &ReflectionConfig,
    assignment: &AssignmentMatrix,
    user: usize,
) -> Result<()> {
    let l = channels.elements();
    if reflection.phases.len() != l {
        return Err(Error::shape(format!(
            "{} phases for {l} elements",
            reflection.phases.len()
        )));
    }
    if assignment.elements() != l || assignment.users() != channels.users() {
        return Err(Error::shape(format!(
            "{}x{} assignment for {} users and {l} elements",
            assignment.users(),
            assignment.elements(),
            channels.users()
        )));
    }
    if user >= channels.users() {
        return Err(Error::shape(format!("user {user} of {}", channels.users())));
    }
    Ok(())
}

/// Masked cascade `h` (length `A`) with `w_k = Σ_a h_a V_k[a]`.
fn cascade(
    channels: &ChannelState,
    reflection: &ReflectionConfig,
    assignment: &AssignmentMatrix,
    user: usize,
    use_estimated: bool,
) -> Vec<Complex> {
    let g1 = channels.g1(use_estimated);
    let g_ru = channels.g_ru(use_estimated);
    let mut h = vec![Complex::new(0.0, 0.0); g1.rows()];
    for l in (0..channels.elements()).filter(|&l| assignment.get(user, l)) {
        let scale = g_ru.get(user, l) * reflection.coefficient(l);
        for (a, h_a) in h.iter_mut().enumerate() {
            *h_a += scale * g1.get(a, l).conj();
        }
    }
    h
}

/// Scalar end-to-end gain `w_k = Σ_l β_kl · g_ru[k,l] · e^{jθ_l} · g1[:,l]ᴴ V_k`.
pub fn effective_gain(
    channels: &ChannelState,
    reflection: &ReflectionConfig,
    assignment: &AssignmentMatrix,
    precoder: &Precoder,
    user: usize,
    use_estimated: bool,
) -> Result<Complex> {
    check_shapes(channels, reflection, assignment, user)?;
    let v = precoder
        .vectors
        .get(user)
        .ok_or_else(|| Error::shape(format!("no precoder for user {user}")))?;
    if v.len() != channels.antennas() {
        return Err(Error::shape(format!(
            "{}-antenna precoder for {} antennas",
            v.len(),
            channels.antennas()
        )));
    }
    let h = cascade(channels, reflection, assignment, user, use_estimated);
    Ok(h.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// `Γ = |w|² / (|w|² ψ² + σ²)`.
pub fn snr(effective_gain: Complex, hi_level: f64, noise_power: f64) -> f64 {
    let s = effective_gain.norm_sqr();
    s / (s * hi_level * hi_level + noise_power)
}

pub fn rates(snrs: &[f64], tau: f64, bandwidth: f64) -> Vec<f64> {
    snrs.iter()
        .map(|&g| (1.0 - tau) * bandwidth * libm::log2(1.0 + g.max(0.0)))
        .collect()
}

/// Unit precoding direction maximising `|w_k|`: the normalised conjugate of
/// the masked cascade. Falls back to a uniform vector when the cascade is zero.
pub fn max_ratio_direction(
    channels: &ChannelState,
    reflection: &ReflectionConfig,
    assignment: &AssignmentMatrix,
    user: usize,
    use_estimated: bool,
) -> Result<Vec<Complex>> {
    check_shapes(channels, reflection, assignment, user)?;
    let h = cascade(channels, reflection, assignment, user, use_estimated);
    let n = libm::sqrt(norm_sqr(&h));
    if n > 0.0 && n.is_finite() {
        Ok(h.iter().map(|z| z.conj() / n).collect())
    } else {
        let u = 1.0 / libm::sqrt(h.len() as f64);
        Ok(vec![Complex::new(u, 0.0); h.len()])
    }
}

/// SNR and rate of every user, scored on the true channels.
pub fn link_report(
    channels: &ChannelState,
    reflection: &ReflectionConfig,
    assignment: &AssignmentMatrix,
    precoder: &Precoder,
    tau: f64,
    bandwidth: f64,
) -> Result<LinkReport> {
    let effective = (0..channels.users())
        .map(|k| effective_gain(channels, reflection, assignment, precoder, k, false))
        .collect::<Result<Vec<_>>>()?;
    let snr: Vec<f64> = effective
        .iter()
        .map(|&w| snr(w, channels.hi_level, channels.noise_power))
        .collect();
    let rate = rates(&snr, tau, bandwidth);
    Ok(LinkReport {
        snr,
        rate,
        effective_gain: effective,
    })
}
