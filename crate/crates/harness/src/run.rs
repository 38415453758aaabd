//! Training and evaluation loops and what they persist.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use uavris_core::agents::{
    exhaustive_search, ActorCritic, ExhaustiveGrid, RandomPolicy, ReplayBuffer, Transition,
};
use uavris_core::env::{Env, StepOutcome};
use uavris_core::rng::{stream, Stream};

use crate::config::{derive_seed, ExperimentConfig, EVAL_DOMAIN, TRAIN_DOMAIN};
use crate::error::{HarnessError, Result};
use crate::store::{EnergyRow, EpisodeRow, EpisodeSummary, LinkRow, RunDir, SlotRow, TraceLine};

pub const CHECKPOINT_BEST: &str = "checkpoint_best.json";
pub const CHECKPOINT_FINAL: &str = "checkpoint_final.json";
const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: RunKind,
    pub config_hash: String,
    pub seed: u64,
    pub agent: String,
    pub strategy: String,
    pub renewable: String,
    pub users: usize,
    pub episodes: usize,
    pub steps: usize,
    pub empty: bool,
    /// Mean per-slot reward: EH efficiency with infeasible slots counted as 0.
    pub mean_efficiency: f64,
    /// Mean EH efficiency ignoring feasibility (evaluation runs only).
    pub mean_raw_efficiency: Option<f64>,
    pub mean_reward: f64,
    pub violation_rate: f64,
    /// Mean episode `mean_efficiency` over the first and last quarter of
    /// training episodes.
    pub first_quartile_mean_reward: Option<f64>,
    pub final_quartile_mean_reward: Option<f64>,
    pub wall_clock_s: f64,
}

impl Summary {
    /// Every statistic agrees with `other` to `tol`; identity fields must
    /// match exactly and the wall clock is ignored.
    pub fn matches(&self, other: &Summary, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        let close_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => close(x, y),
            (None, None) => true,
            _ => false,
        };
        self.kind == other.kind
            && self.config_hash == other.config_hash
            && self.seed == other.seed
            && (self.episodes, self.steps, self.empty) == (other.episodes, other.steps, other.empty)
            && close(self.mean_efficiency, other.mean_efficiency)
            && close_opt(self.mean_raw_efficiency, other.mean_raw_efficiency)
            && close(self.mean_reward, other.mean_reward)
            && close(self.violation_rate, other.violation_rate)
            && close_opt(
                self.first_quartile_mean_reward,
                other.first_quartile_mean_reward,
            )
            && close_opt(
                self.final_quartile_mean_reward,
                other.final_quartile_mean_reward,
            )
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub summary: Summary,
    pub episodes: Vec<EpisodeRow>,
    pub slots: Vec<SlotRow>,
}

impl RunRecord {
    pub fn checkpoint(&self, which: &str) -> PathBuf {
        self.dir.join(which)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: u32,
    pub model_hash: String,
    pub config_hash: String,
    pub seed: u64,
    pub episode: usize,
    pub episode_return: f64,
    pub agent: ActorCritic,
}

pub fn load_checkpoint(path: &Path, config: &ExperimentConfig) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Checkpoint(format!("{}: {e}", path.display())))?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(HarnessError::Checkpoint(format!(
            "unsupported format {}",
            ck.format
        )));
    }
    let expected = config.model_hash()?;
    if ck.model_hash != expected {
        return Err(HarnessError::Checkpoint(format!(
            "model hash {} does not match config ({expected})",
            ck.model_hash
        )));
    }
    Ok(ck)
}

/// Per-slot rows of a run: slot, energy and link rows, plus the optional trace.
#[derive(Default)]
struct SlotLog {
    slots: Vec<SlotRow>,
    energy: Vec<EnergyRow>,
    links: Vec<LinkRow>,
    trace: Vec<TraceLine>,
}

impl SlotLog {
    /// `env` is read before stepping, so the trace holds the slot's own geometry.
    fn trace(&mut self, config: &ExperimentConfig, slot: usize, env: &Env) {
        if config.trace || config.trace_channels {
            self.trace.push(TraceLine {
                slot,
                layout: env.layout().trace(),
                channels: config.trace_channels.then(|| env.channels().clone()),
            });
        }
    }

    fn record(&mut self, slot: usize, out: &StepOutcome, r_min_bps: f64) {
        let s = &out.info.slot;
        self.slots.push(SlotRow {
            slot,
            reward: out.reward,
            efficiency: s.efficiency,
            battery_j: s.battery_after,
            rates: s.link.rate.clone(),
            feasible: s.feasible(),
        });
        self.energy.push(EnergyRow {
            slot,
            rf_j: s.energy.rf_harvested,
            re_j: s.energy.re_harvested,
            consumed_j: s.energy.consumed,
            incident_j: s.energy.incident,
            efficiency: s.energy.efficiency,
            battery_j: s.battery_after,
        });
        for (user, (&snr, &rate)) in s.link.snr.iter().zip(&s.link.rate).enumerate() {
            self.links.push(LinkRow {
                slot,
                user,
                snr_db: 10.0 * snr.log10(),
                rate_bps: rate,
                qos_met: rate >= r_min_bps,
            });
        }
    }

    fn write(&self, dir: &RunDir, config: &ExperimentConfig) -> Result<()> {
        dir.write_csv(
            "slots.csv",
            &self.slots,
            Some(&SlotRow::headers(config.env.users)),
        )?;
        dir.write_csv("energy.csv", &self.energy, None)?;
        dir.write_csv("links.csv", &self.links, None)?;
        if config.trace || config.trace_channels {
            dir.write_jsonl("trace.jsonl", &self.trace)?;
        }
        Ok(())
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

fn quartiles(episodes: &[EpisodeRow]) -> (Option<f64>, Option<f64>) {
    if episodes.is_empty() {
        return (None, None);
    }
    let q = episodes.len().div_ceil(4);
    (
        mean(episodes[..q].iter().map(|e| e.mean_efficiency)),
        mean(
            episodes[episodes.len() - q..]
                .iter()
                .map(|e| e.mean_efficiency),
        ),
    )
}

/// Summary of a training run, computed only from its episode rows.
pub fn summarize_train(base: Summary, episodes: &[EpisodeRow], steps: usize) -> Summary {
    let total_return: f64 = episodes.iter().map(|e| e.ret).sum();
    let violations: usize = episodes.iter().map(|e| e.violations).sum();
    let (first, last) = quartiles(episodes);
    let per_slot = if steps > 0 {
        total_return / steps as f64
    } else {
        0.0
    };
    Summary {
        episodes: episodes.len(),
        steps,
        empty: steps == 0,
        mean_efficiency: per_slot,
        mean_raw_efficiency: None,
        mean_reward: per_slot,
        violation_rate: if steps > 0 {
            violations as f64 / steps as f64
        } else {
            0.0
        },
        first_quartile_mean_reward: first,
        final_quartile_mean_reward: last,
        ..base
    }
}

/// Summary of an evaluation run, computed only from its slot rows.
pub fn summarize_eval(base: Summary, slots: &[SlotRow]) -> Summary {
    let n = slots.len();
    Summary {
        episodes: 0,
        steps: n,
        empty: n == 0,
        mean_efficiency: mean(slots.iter().map(|s| s.reward)).unwrap_or(0.0),
        mean_raw_efficiency: Some(mean(slots.iter().map(|s| s.efficiency)).unwrap_or(0.0)),
        mean_reward: mean(slots.iter().map(|s| s.reward)).unwrap_or(0.0),
        violation_rate: mean(slots.iter().map(|s| if s.feasible { 0.0 } else { 1.0 }))
            .unwrap_or(0.0),
        first_quartile_mean_reward: None,
        final_quartile_mean_reward: None,
        ..base
    }
}

fn base_summary(kind: RunKind, config: &ExperimentConfig, hash: &str, seed: u64) -> Summary {
    Summary {
        kind,
        config_hash: hash.to_string(),
        seed,
        agent: config.agent_kind.to_string(),
        strategy: config.env.strategy.to_string(),
        renewable: if config.env.renewable_enabled {
            "on"
        } else {
            "off"
        }
        .into(),
        users: config.env.users,
        episodes: 0,
        steps: 0,
        empty: true,
        mean_efficiency: 0.0,
        mean_raw_efficiency: None,
        mean_reward: 0.0,
        violation_rate: 0.0,
        first_quartile_mean_reward: None,
        final_quartile_mean_reward: None,
        wall_clock_s: 0.0,
    }
}

fn persist_config(dir: &RunDir, config: &ExperimentConfig, seed: u64) -> Result<()> {
    let archived = ExperimentConfig {
        seeds: vec![seed],
        ..config.clone()
    };
    dir.write("config.toml", archived.to_toml_string()?.as_bytes())
}

enum Behaviour {
    Learner(Box<ActorCritic>),
    Random(Box<RandomPolicy>),
}

/// Trains `config.agent_kind` for `config.agent.episodes` episodes with the
/// given seed. Random agents roll out without learning, which gives a
/// reference reward curve.
pub fn run_train(config: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    let config = config.resolve()?;
    let hash = config.config_hash()?;
    let model_hash = config.model_hash()?;
    let started = Instant::now();
    let env_cfg = config.env.clone();
    let mut behaviour = match config.agent_kind {
        k if k.learns() => Behaviour::Learner(Box::new(ActorCritic::new(
            k,
            config.agent.clone(),
            env_cfg.state_dim(),
            env_cfg.action_dim(),
            seed,
        )?)),
        uavris_core::agents::AgentKind::Random => {
            Behaviour::Random(Box::new(RandomPolicy::new(env_cfg.action_dim(), seed)))
        }
        other => {
            return Err(HarnessError::Config(format!(
                "agent `{other}` cannot be trained; use eval"
            )))
        }
    };

    let dir = RunDir::create(
        &config.output_dir,
        &format!("train-{}-seed{seed}", config.label()),
        &hash,
        seed,
    )?;
    persist_config(&dir, &config, seed)?;

    let mut buffer = ReplayBuffer::new(config.agent.buffer_capacity, stream(seed, Stream::Replay));
    let mut env = Env::new(env_cfg.clone(), derive_seed(seed, TRAIN_DOMAIN, 0))?;
    let mut episodes = Vec::with_capacity(config.agent.episodes);
    let mut log = SlotLog::default();
    let mut steps = 0usize;
    let mut best_return = f64::NEG_INFINITY;

    for ep in 0..config.agent.episodes {
        let mut state = env.reset(derive_seed(seed, TRAIN_DOMAIN, ep as u64))?;
        let mut ret = 0.0;
        let mut violations = 0;
        let mut len = 0usize;
        loop {
            let action = match &mut behaviour {
                Behaviour::Learner(agent) => {
                    agent.observe(state.as_slice());
                    if steps < config.agent.warmup_steps {
                        agent.random_action()
                    } else {
                        agent.act(state.as_slice(), true)?
                    }
                }
                Behaviour::Random(p) => p.act(),
            };
            if config.log_training_slots {
                log.trace(&config, steps, &env);
            }
            let out = env.step(&action)?;
            if config.log_training_slots {
                log.record(steps, &out, env_cfg.r_min_bps);
            }
            ret += out.reward;
            violations += usize::from(!out.info.slot.feasible());
            len += 1;
            steps += 1;
            if let Behaviour::Learner(agent) = &mut behaviour {
                buffer.push(Transition {
                    state: state.0,
                    action,
                    reward: out.reward,
                    next_state: out.next_state.0.clone(),
                    done: out.done,
                });
                if buffer.len() >= config.agent.batch_size {
                    for _ in 0..config.agent.updates_per_step {
                        let batch = buffer.sample(config.agent.batch_size);
                        agent.train_step(&batch)?;
                    }
                }
            }
            state = out.next_state;
            if out.done {
                break;
            }
        }
        episodes.push(EpisodeRow {
            episode: ep,
            ret,
            mean_efficiency: ret / len as f64,
            violations,
        });
        if let Behaviour::Learner(agent) = &behaviour {
            if ret > best_return {
                best_return = ret;
                dir.write_json(
                    CHECKPOINT_BEST,
                    &Checkpoint {
                        format: CHECKPOINT_FORMAT,
                        model_hash: model_hash.clone(),
                        config_hash: hash.clone(),
                        seed,
                        episode: ep,
                        episode_return: ret,
                        agent: (**agent).clone(),
                    },
                )?;
            }
        }
    }
    if let Behaviour::Learner(agent) = &behaviour {
        dir.write_json(
            CHECKPOINT_FINAL,
            &Checkpoint {
                format: CHECKPOINT_FORMAT,
                model_hash,
                config_hash: hash.clone(),
                seed,
                episode: episodes.len().saturating_sub(1),
                episode_return: episodes.last().map_or(0.0, |e| e.ret),
                agent: (**agent).clone(),
            },
        )?;
    }

    dir.write_csv("episodes.csv", &episodes, None)?;
    let lines: Vec<EpisodeSummary> = episodes
        .iter()
        .map(|e| EpisodeSummary {
            episode: e.episode,
            ret: e.ret,
            mean_efficiency: e.mean_efficiency,
            violations: e.violations,
            seed: derive_seed(seed, TRAIN_DOMAIN, e.episode as u64),
        })
        .collect();
    dir.write_jsonl("episodes.jsonl", &lines)?;
    if config.log_training_slots {
        log.write(&dir, &config)?;
    }
    let mut summary = summarize_train(
        base_summary(RunKind::Train, &config, &hash, seed),
        &episodes,
        steps,
    );
    summary.wall_clock_s = started.elapsed().as_secs_f64();
    dir.write_json("summary.json", &summary)?;
    let path = dir.finish()?;
    Ok(RunRecord {
        dir: path,
        summary,
        episodes,
        slots: log.slots,
    })
}

enum Policy {
    Learned(Box<ActorCritic>),
    Random(Box<RandomPolicy>),
    Exhaustive(ExhaustiveGrid, u128),
}

/// Greedy rollout over `steps` held-out slots. Slot `i` is the same for
/// every policy evaluated with the same seed and environment settings.
pub fn run_eval(
    config: &ExperimentConfig,
    seed: u64,
    checkpoint: Option<&Path>,
    steps: usize,
) -> Result<RunRecord> {
    let config = config.resolve()?;
    let hash = config.config_hash()?;
    let started = Instant::now();
    let env_cfg = config.env.clone();
    let mut policy = match (config.agent_kind, checkpoint) {
        (k, Some(path)) if k.learns() => {
            Policy::Learned(Box::new(load_checkpoint(path, &config)?.agent))
        }
        (k, None) if k.learns() => {
            return Err(HarnessError::Config(format!(
                "evaluating `{k}` needs a checkpoint"
            )));
        }
        (uavris_core::agents::AgentKind::Random, _) => {
            Policy::Random(Box::new(RandomPolicy::new(env_cfg.action_dim(), seed)))
        }
        _ => {
            let e = config.exhaustive;
            let grid =
                ExhaustiveGrid::uniform(&env_cfg, e.tau_levels, e.power_levels, e.phase_levels);
            let combos = grid.combinations(&env_cfg);
            if combos > e.budget as u128 {
                return Err(HarnessError::Core(uavris_core::Error::BudgetExceeded {
                    combinations: combos,
                    budget: e.budget as u128,
                }));
            }
            Policy::Exhaustive(grid, e.budget as u128)
        }
    };

    let dir = RunDir::create(
        &config.output_dir,
        &format!("eval-{}-seed{seed}", config.label()),
        &hash,
        seed,
    )?;
    persist_config(&dir, &config, seed)?;
    if let Policy::Exhaustive(grid, _) = &policy {
        dir.write_json("exhaustive_grid.json", grid)?;
    }
    if let (Policy::Learned(_), Some(path)) = (&policy, checkpoint) {
        let abs = std::fs::canonicalize(path).map_err(|e| HarnessError::io(path, e))?;
        dir.write(
            "checkpoint_source",
            format!("{}\n", abs.display()).as_bytes(),
        )?;
    }

    let mut log = SlotLog::default();
    let mut episode = 0u64;
    let mut env = Env::new(env_cfg.clone(), derive_seed(seed, EVAL_DOMAIN, episode))?;
    let mut state = env.state();
    for slot in 0..steps {
        let action = match &mut policy {
            Policy::Learned(agent) => agent.act(state.as_slice(), false)?,
            Policy::Random(p) => p.act(),
            Policy::Exhaustive(grid, budget) => exhaustive_search(&env, grid, *budget)?.raw_action,
        };
        log.trace(&config, slot, &env);
        let out = env.step(&action)?;
        log.record(slot, &out, env_cfg.r_min_bps);
        state = out.next_state;
        if out.done {
            episode += 1;
            state = env.reset(derive_seed(seed, EVAL_DOMAIN, episode))?;
        }
    }

    log.write(&dir, &config)?;
    let mut summary = summarize_eval(
        base_summary(RunKind::Eval, &config, &hash, seed),
        &log.slots,
    );
    summary.wall_clock_s = started.elapsed().as_secs_f64();
    dir.write_json("summary.json", &summary)?;
    let path = dir.finish()?;
    Ok(RunRecord {
        dir: path,
        summary,
        episodes: Vec::new(),
        slots: log.slots,
    })
}

/// Re-runs a completed run from the config archived in its directory,
/// writing into `output_dir`.
pub fn rerun(run_dir: &Path, output_dir: &Path) -> Result<RunRecord> {
    let config = ExperimentConfig::load(&run_dir.join("config.toml"))?;
    let old: Summary = serde_json::from_str(
        &std::fs::read_to_string(run_dir.join("summary.json"))
            .map_err(|e| HarnessError::io(run_dir, e))?,
    )?;
    let config = ExperimentConfig {
        output_dir: output_dir.to_path_buf(),
        ..config
    };
    match old.kind {
        RunKind::Train => run_train(&config, old.seed),
        RunKind::Eval => {
            let ck = run_dir.join("checkpoint_source");
            let source = std::fs::read_to_string(&ck)
                .ok()
                .map(|s| PathBuf::from(s.trim()));
            run_eval(&config, old.seed, source.as_deref(), old.steps)
        }
    }
}
