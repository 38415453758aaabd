//! Experiment configuration: TOML in, fully resolved TOML out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uavris_core::agents::{AgentHyperparams, AgentKind};
use uavris_core::env::{EnvConfig, Strategy};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn enabled(self) -> bool {
        self == OnOff::On
    }
}

impl From<bool> for OnOff {
    fn from(b: bool) -> Self {
        if b {
            OnOff::On
        } else {
            OnOff::Off
        }
    }
}

impl std::fmt::Display for OnOff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.enabled() { "on" } else { "off" })
    }
}

impl std::str::FromStr for OnOff {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(OnOff::On),
            "off" => Ok(OnOff::Off),
            other => Err(HarnessError::Config(format!(
                "renewable must be `on` or `off`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impairments {
    /// CSI error standard deviation `ζ`.
    pub csi_error_std: f64,
    /// Hardware-impairment level `ψ`.
    pub hi_level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExhaustiveSettings {
    pub tau_levels: usize,
    pub power_levels: usize,
    pub phase_levels: usize,
    pub budget: u64,
}

impl Default for ExhaustiveSettings {
    fn default() -> Self {
        Self {
            tau_levels: 5,
            power_levels: 5,
            phase_levels: 4,
            budget: 1_000_000,
        }
    }
}

/// Everything needed to reproduce a run.
///
/// `strategy`, `renewable` and `impairments` are shorthands: when present
/// they override the matching `env` fields. [`ExperimentConfig::resolve`]
/// writes the effective values back so an archived config is
/// self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agent_kind: AgentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub renewable: Option<OnOff>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Greedy evaluation steps after training.
    pub eval_steps: usize,
    /// Also write per-slot rows while training.
    pub log_training_slots: bool,
    /// Write `trace.jsonl` with the layout of every logged slot.
    pub trace: bool,
    /// Add the true and estimated channels to each trace line.
    pub trace_channels: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impairments: Option<Impairments>,
    pub exhaustive: ExhaustiveSettings,
    pub env: EnvConfig,
    pub agent: AgentHyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            agent_kind: AgentKind::EeDdpg,
            strategy: None,
            renewable: None,
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
            eval_steps: 200,
            log_training_slots: false,
            trace: false,
            trace_channels: false,
            impairments: None,
            exhaustive: ExhaustiveSettings::default(),
            env: EnvConfig::default(),
            agent: AgentHyperparams::default(),
        }
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Runtime(format!("toml: {e}")))
    }

    /// Applies the shorthands, validates, and returns the self-contained form.
    pub fn resolve(&self) -> Result<Self> {
        let mut out = self.clone();
        if let Some(s) = self.strategy {
            out.env.strategy = s;
        }
        if let Some(r) = self.renewable {
            out.env.renewable_enabled = r.enabled();
        }
        if let Some(i) = self.impairments {
            out.env.csi_error_std = i.csi_error_std;
            out.env.hi_level = i.hi_level;
        }
        out.strategy = Some(out.env.strategy);
        out.renewable = Some(out.env.renewable_enabled.into());
        out.impairments = Some(Impairments {
            csi_error_std: out.env.csi_error_std,
            hi_level: out.env.hi_level,
        });
        out.env.validate()?;
        out.agent.validate()?;
        if out.seeds.is_empty() {
            return Err(HarnessError::Config(
                "seeds: at least one seed is required".into(),
            ));
        }
        let e = &out.exhaustive;
        if e.tau_levels == 0 || e.power_levels == 0 || e.phase_levels == 0 {
            return Err(HarnessError::Config(
                "exhaustive: every grid axis needs >= 1 level".into(),
            ));
        }
        Ok(out)
    }

    /// Hash of the resolved config, independent of where outputs go and
    /// which seeds run.
    pub fn config_hash(&self) -> Result<String> {
        let mut c = self.resolve()?;
        c.output_dir = PathBuf::new();
        c.seeds.clear();
        Ok(digest(&serde_json::to_vec(&c)?))
    }

    /// Hash of what fixes a trained model: network shapes, learning setup and
    /// the harvesting strategy. Evaluation-time knobs (impairments, renewable
    /// source, mobility) are left out so one checkpoint can be scored under
    /// several of them.
    pub fn model_hash(&self) -> Result<String> {
        let c = self.resolve()?;
        let key = serde_json::json!({
            "agent_kind": c.agent_kind,
            "agent": c.agent,
            "antennas": c.env.antennas,
            "users": c.env.users,
            "ris_rows": c.env.ris_rows,
            "ris_cols": c.env.ris_cols,
            "strategy": c.env.strategy,
        });
        Ok(digest(&serde_json::to_vec(&key)?))
    }

    /// Short label used for run directory names.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-re{}-k{}",
            self.agent_kind,
            self.strategy.unwrap_or(self.env.strategy),
            self.renewable.unwrap_or(self.env.renewable_enabled.into()),
            self.env.users
        )
    }
}

/// Seed for the `index`-th item of a derived family (episodes, evaluation
/// slots, ...), via splitmix64.
pub fn derive_seed(base: u64, domain: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(domain.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const TRAIN_DOMAIN: u64 = 1;
pub const EVAL_DOMAIN: u64 = 2;
