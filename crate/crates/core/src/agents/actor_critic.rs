//! DDPG, TD3 and the dual-actor EE-DDPG on one shared network core.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::net::{Activation, Adam, DenseNet, RunningNorm};
use super::replay::Transition;
use crate::rng::{normal, stream, SimRng, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    EeDdpg,
    Td3,
    Ddpg,
    Random,
    Exhaustive,
}

impl AgentKind {
    pub fn learns(self) -> bool {
        matches!(self, AgentKind::EeDdpg | AgentKind::Td3 | AgentKind::Ddpg)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::EeDdpg => "ee-ddpg",
            AgentKind::Td3 => "td3",
            AgentKind::Ddpg => "ddpg",
            AgentKind::Random => "random",
            AgentKind::Exhaustive => "exhaustive",
        }
    }

    fn actors(self) -> usize {
        if self == AgentKind::EeDdpg {
            2
        } else {
            1
        }
    }

    fn critics(self) -> usize {
        if self == AgentKind::Ddpg {
            1
        } else {
            2
        }
    }
}

impl core::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ee-ddpg" | "eeddpg" => Ok(AgentKind::EeDdpg),
            "td3" => Ok(AgentKind::Td3),
            "ddpg" => Ok(AgentKind::Ddpg),
            "random" => Ok(AgentKind::Random),
            "exhaustive" => Ok(AgentKind::Exhaustive),
            other => Err(Error::config(
                "agent",
                alloc::format!("unknown agent `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentHyperparams {
    pub gamma: f64,
    /// Soft-update rate `ϱ`.
    pub rho: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub exploration_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    /// Softmax temperature of the EE-DDPG target.
    pub temperature: f64,
    /// Target-action draws `N_a` per next state.
    pub target_samples: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub episodes: usize,
    pub hidden: Vec<usize>,
    /// TD3 actor/target update period.
    pub policy_delay: usize,
    /// Uniform-random steps before the policy takes over.
    pub warmup_steps: usize,
    pub updates_per_step: usize,
}

impl Default for AgentHyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            rho: 0.005,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            exploration_std: 0.1,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            temperature: 1.0,
            target_samples: 50,
            batch_size: 64,
            buffer_capacity: 100_000,
            episodes: 5000,
            hidden: vec![256, 256],
            policy_delay: 2,
            warmup_steps: 64,
            updates_per_step: 1,
        }
    }
}

impl AgentHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::config("agent.rho", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("agent.gamma", "must lie in [0, 1]"));
        }
        if self.target_samples == 0 {
            return Err(Error::config("agent.target_samples", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("agent.batch_size", "must be >= 1"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::config("agent.buffer_capacity", "must be >= 1"));
        }
        if self.policy_delay == 0 {
            return Err(Error::config("agent.policy_delay", "must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("agent.hidden", "layer widths must be >= 1"));
        }
        for (v, field) in [
            (self.actor_lr, "agent.actor_lr"),
            (self.critic_lr, "agent.critic_lr"),
            (self.exploration_std, "agent.exploration_std"),
            (self.target_noise_std, "agent.target_noise_std"),
            (self.target_noise_clip, "agent.target_noise_clip"),
            (self.temperature, "agent.temperature"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be non-negative and finite"));
            }
        }
        Ok(())
    }
}

/// `Σ exp(t·q)·q / Σ exp(t·q)` with max-subtraction.
pub fn softmax_expectation(values: &[f64], temperature: f64) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for &q in values {
        let w = libm::exp(temperature * (q - max));
        num += w * q;
        den += w;
    }
    num / den
}

fn clipped_noise(rng: &mut SimRng, dim: usize, std: f64, clip: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| normal(rng, std).clamp(-clip, clip))
        .collect()
}

fn perturbed(mu: &[f64], noise: &[f64]) -> Vec<f64> {
    mu.iter()
        .zip(noise)
        .map(|(m, n)| (m + n).clamp(-1.0, 1.0))
        .collect()
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn q(critic: &DenseNet, s: &[f64], a: &[f64]) -> Result<f64> {
    Ok(critic.forward(&concat(s, a))?[0])
}

/// Softmax-weighted target over `N_a` draws of the clipped double-Q minimum.
///
/// Each draw perturbs both target actors with one shared clipped-noise
/// vector and scores actor `i` with target critic `i`.
pub fn softmax_target_value(
    s_next: &[f64],
    actors: [&DenseNet; 2],
    critics: [&DenseNet; 2],
    hp: &AgentHyperparams,
    rng: &mut SimRng,
) -> Result<f64> {
    let mu = [actors[0].forward(s_next)?, actors[1].forward(s_next)?];
    let draws = (0..hp.target_samples.max(1))
        .map(|_| {
            let noise = clipped_noise(rng, mu[0].len(), hp.target_noise_std, hp.target_noise_clip);
            let q1 = q(critics[0], s_next, &perturbed(&mu[0], &noise))?;
            let q2 = q(critics[1], s_next, &perturbed(&mu[1], &noise))?;
            Ok(q1.min(q2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(softmax_expectation(&draws, hp.temperature))
}

/// Clipped double-Q target with one smoothed target action.
pub fn td3_target_value(
    s_next: &[f64],
    actor: &DenseNet,
    critics: [&DenseNet; 2],
    hp: &AgentHyperparams,
    rng: &mut SimRng,
) -> Result<f64> {
    let mu = actor.forward(s_next)?;
    let noise = clipped_noise(rng, mu.len(), hp.target_noise_std, hp.target_noise_clip);
    let a = perturbed(&mu, &noise);
    Ok(q(critics[0], s_next, &a)?.min(q(critics[1], s_next, &a)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainDiagnostics {
    pub critic_loss: f64,
    pub mean_target: f64,
    /// Index of the actor updated this step, if any.
    pub actor_updated: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActorCritic {
    kind: AgentKind,
    hp: AgentHyperparams,
    obs_dim: usize,
    act_dim: usize,
    pub actors: Vec<DenseNet>,
    pub actor_targets: Vec<DenseNet>,
    pub critics: Vec<DenseNet>,
    pub critic_targets: Vec<DenseNet>,
    actor_opts: Vec<Adam>,
    critic_opts: Vec<Adam>,
    norm: RunningNorm,
    exploration: SimRng,
    target_noise: SimRng,
    updates: u64,
}

const FINAL_LAYER_SCALE: f64 = 3e-3;

impl ActorCritic {
    pub fn new(
        kind: AgentKind,
        hp: AgentHyperparams,
        obs_dim: usize,
        act_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        if !kind.learns() {
            return Err(Error::config(
                "agent",
                alloc::format!("`{kind}` has no networks"),
            ));
        }
        hp.validate()?;
        let mut init = stream(seed, Stream::AgentInit);
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(&hp.hidden);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend_from_slice(&hp.hidden);
        critic_sizes.push(1);

        let actors = (0..kind.actors())
            .map(|_| {
                DenseNet::new(
                    &actor_sizes,
                    Activation::Relu,
                    Activation::Tanh,
                    FINAL_LAYER_SCALE,
                    &mut init,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let critics = (0..kind.critics())
            .map(|_| {
                DenseNet::new(
                    &critic_sizes,
                    Activation::Relu,
                    Activation::Identity,
                    FINAL_LAYER_SCALE,
                    &mut init,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let actor_opts = actors
            .iter()
            .map(|n| Adam::new(n.param_count(), hp.actor_lr))
            .collect();
        let critic_opts = critics
            .iter()
            .map(|n| Adam::new(n.param_count(), hp.critic_lr))
            .collect();
        Ok(Self {
            kind,
            obs_dim,
            act_dim,
            actor_targets: actors.clone(),
            critic_targets: critics.clone(),
            actors,
            critics,
            actor_opts,
            critic_opts,
            norm: RunningNorm::new(obs_dim),
            exploration: stream(seed, Stream::Exploration),
            target_noise: stream(seed, Stream::TargetNoise),
            updates: 0,
            hp,
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn hyperparams(&self) -> &AgentHyperparams {
        &self.hp
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Folds a raw observation into the running normaliser.
    pub fn observe(&mut self, state: &[f64]) {
        self.norm.update(state);
    }

    pub fn normalize(&self, state: &[f64]) -> Vec<f64> {
        self.norm.normalize(state)
    }

    /// Actor whose paired critic scores its own action higher; ties go to
    /// the first actor.
    pub fn select_actor(&self, s: &[f64]) -> Result<(usize, Vec<f64>)> {
        let a0 = self.actors[0].forward(s)?;
        if self.actors.len() == 1 {
            return Ok((0, a0));
        }
        let a1 = self.actors[1].forward(s)?;
        if q(&self.critics[0], s, &a0)? >= q(&self.critics[1], s, &a1)? {
            Ok((0, a0))
        } else {
            Ok((1, a1))
        }
    }

    /// Action for a raw observation, with Gaussian exploration when asked.
    pub fn act(&mut self, state: &[f64], explore: bool) -> Result<Vec<f64>> {
        let s = self.norm.normalize(state);
        let (_, mut a) = self.select_actor(&s)?;
        if explore && self.hp.exploration_std > 0.0 {
            for v in a.iter_mut() {
                *v += normal(&mut self.exploration, self.hp.exploration_std);
            }
        }
        a.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
        Ok(a)
    }

    /// Uniform action from the exploration stream, for warm-up.
    pub fn random_action(&mut self) -> Vec<f64> {
        use rand::Rng;
        (0..self.act_dim)
            .map(|_| self.exploration.random_range(-1.0..=1.0))
            .collect()
    }

    fn bootstrap(&mut self, s_next: &[f64]) -> Result<f64> {
        match self.kind {
            AgentKind::EeDdpg => softmax_target_value(
                s_next,
                [&self.actor_targets[0], &self.actor_targets[1]],
                [&self.critic_targets[0], &self.critic_targets[1]],
                &self.hp,
                &mut self.target_noise,
            ),
            AgentKind::Td3 => td3_target_value(
                s_next,
                &self.actor_targets[0],
                [&self.critic_targets[0], &self.critic_targets[1]],
                &self.hp,
                &mut self.target_noise,
            ),
            _ => {
                let a = self.actor_targets[0].forward(s_next)?;
                q(&self.critic_targets[0], s_next, &a)
            }
        }
    }

    /// Bellman targets `r + γ(1 − d)·V(s')` for a batch of normalised
    /// transitions.
    pub fn targets(&mut self, batch: &[(Vec<f64>, &Transition, Vec<f64>)]) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|(_, t, s_next)| {
                if t.done || self.hp.gamma == 0.0 {
                    Ok(t.reward)
                } else {
                    Ok(t.reward + self.hp.gamma * self.bootstrap(s_next)?)
                }
            })
            .collect()
    }

    fn critic_step(
        &mut self,
        j: usize,
        batch: &[(Vec<f64>, &Transition, Vec<f64>)],
        y: &[f64],
    ) -> Result<f64> {
        let n = batch.len() as f64;
        let net = &self.critics[j];
        let mut grads = vec![0.0; net.param_count()];
        let mut loss = 0.0;
        for ((s, t, _), &target) in batch.iter().zip(y) {
            let trace = net.forward_trace(&concat(s, &t.action))?;
            let err = trace.output()[0] - target;
            loss += err * err / n;
            net.backward(&trace, &[err / n], &mut grads)?;
        }
        self.critic_opts[j].step(self.critics[j].params_mut(), &grads);
        Ok(loss)
    }

    fn actor_step(
        &mut self,
        i: usize,
        critic: usize,
        batch: &[(Vec<f64>, &Transition, Vec<f64>)],
    ) -> Result<()> {
        let n = batch.len() as f64;
        let actor = &self.actors[i];
        let qnet = &self.critics[critic];
        let mut grads = vec![0.0; actor.param_count()];
        let mut scratch = vec![0.0; qnet.param_count()];
        for (s, _, _) in batch {
            let a_trace = actor.forward_trace(s)?;
            let q_trace = qnet.forward_trace(&concat(s, a_trace.output()))?;
            let d_input = qnet.backward(&q_trace, &[-1.0 / n], &mut scratch)?;
            actor.backward(&a_trace, &d_input[self.obs_dim..], &mut grads)?;
        }
        self.actor_opts[i].step(self.actors[i].params_mut(), &grads);
        Ok(())
    }

    fn mean_q(&self, i: usize, batch: &[(Vec<f64>, &Transition, Vec<f64>)]) -> Result<f64> {
        let mut total = 0.0;
        for (s, _, _) in batch {
            total += q(&self.critics[i], s, &self.actors[i].forward(s)?)?;
        }
        Ok(total / batch.len() as f64)
    }

    fn soft_update_all(&mut self) {
        let rho = self.hp.rho;
        for (t, m) in self.actor_targets.iter_mut().zip(&self.actors) {
            t.soft_update_from(m, rho);
        }
        for (t, m) in self.critic_targets.iter_mut().zip(&self.critics) {
            t.soft_update_from(m, rho);
        }
    }

    /// One gradient update on a replayed batch. An empty batch is a no-op.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<Option<TrainDiagnostics>> {
        if batch.is_empty() {
            return Ok(None);
        }
        let prepared: Vec<(Vec<f64>, &Transition, Vec<f64>)> = batch
            .iter()
            .map(|t| {
                (
                    self.norm.normalize(&t.state),
                    *t,
                    self.norm.normalize(&t.next_state),
                )
            })
            .collect();
        for (s, t, _) in &prepared {
            if s.len() != self.obs_dim || t.action.len() != self.act_dim {
                return Err(Error::shape(
                    "transition does not match the agent dimensions",
                ));
            }
        }
        let y = self.targets(&prepared)?;
        let mut critic_loss = 0.0;
        for j in 0..self.critics.len() {
            critic_loss += self.critic_step(j, &prepared, &y)? / self.critics.len() as f64;
        }
        self.updates += 1;

        let actor_updated = match self.kind {
            AgentKind::EeDdpg => {
                let i = if self.mean_q(0, &prepared)? >= self.mean_q(1, &prepared)? {
                    0
                } else {
                    1
                };
                self.actor_step(i, i, &prepared)?;
                self.soft_update_all();
                Some(i)
            }
            AgentKind::Td3 => {
                if self.updates.is_multiple_of(self.hp.policy_delay as u64) {
                    self.actor_step(0, 0, &prepared)?;
                    self.soft_update_all();
                    Some(0)
                } else {
                    None
                }
            }
            _ => {
                self.actor_step(0, 0, &prepared)?;
                self.soft_update_all();
                Some(0)
            }
        };
        Ok(Some(TrainDiagnostics {
            critic_loss,
            mean_target: y.iter().sum::<f64>() / y.len() as f64,
            actor_updated,
        }))
    }

    /// Every network the agent owns, main nets first.
    pub fn networks(&self) -> impl Iterator<Item = &DenseNet> {
        self.actors
            .iter()
            .chain(&self.critics)
            .chain(&self.actor_targets)
            .chain(&self.critic_targets)
    }
}
