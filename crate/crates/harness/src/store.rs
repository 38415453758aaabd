//! Append-only run directories and the row file formats.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uavris_core::channel::ChannelState;
use uavris_core::geometry::LayoutTrace;

use crate::error::{HarnessError, Result};

pub const PARTIAL_MARKER: &str = "PARTIAL";

/// A fresh directory for one run. Existing directories are never reused:
/// a name clash gets a numeric suffix.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    header: String,
}

impl RunDir {
    pub fn create(base: &Path, name: &str, config_hash: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(base).map_err(|e| HarnessError::io(base, e))?;
        let mut path = base.join(name);
        let mut n = 1;
        loop {
            match fs::create_dir(&path) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    path = base.join(format!("{name}.{n}"));
                    n += 1;
                }
                Err(e) => return Err(HarnessError::io(&path, e)),
            }
        }
        let dir = Self {
            header: format!("# config_hash={config_hash} seed={seed}\n"),
            path,
        };
        dir.write(PARTIAL_MARKER, b"run did not finish\n")?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&self, file: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path.join(file);
        fs::write(&p, bytes).map_err(|e| HarnessError::io(&p, e))
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(file, &bytes)
    }

    /// CSV with a leading `# config_hash=… seed=…` comment line.
    pub fn write_csv<T: Serialize>(
        &self,
        file: &str,
        rows: &[T],
        headers: Option<&[String]>,
    ) -> Result<()> {
        let p = self.path.join(file);
        let mut out = fs::File::create(&p).map_err(|e| HarnessError::io(&p, e))?;
        out.write_all(self.header.as_bytes())
            .map_err(|e| HarnessError::io(&p, e))?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(headers.is_none())
            .from_writer(out);
        if let Some(h) = headers {
            w.write_record(h)?;
        }
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| HarnessError::io(&p, e))?;
        Ok(())
    }

    /// One JSON value per line.
    pub fn write_jsonl<T: Serialize>(&self, file: &str, values: &[T]) -> Result<()> {
        let mut bytes = Vec::new();
        for v in values {
            serde_json::to_writer(&mut bytes, v)?;
            bytes.push(b'\n');
        }
        self.write(file, &bytes)
    }

    /// Removes the partial marker; the directory is complete from here on.
    pub fn finish(self) -> Result<PathBuf> {
        let m = self.path.join(PARTIAL_MARKER);
        fs::remove_file(&m).map_err(|e| HarnessError::io(&m, e))?;
        Ok(self.path)
    }
}

pub fn is_complete(dir: &Path) -> bool {
    dir.is_dir() && !dir.join(PARTIAL_MARKER).exists()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    /// Mean per-slot reward, i.e. efficiency with infeasible slots at zero.
    pub mean_efficiency: f64,
    pub violations: usize,
}

/// Line of `episodes.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub mean_efficiency: f64,
    pub violations: usize,
    pub seed: u64,
}

/// Row of `energy.csv`, in joules per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub slot: usize,
    pub rf_j: f64,
    pub re_j: f64,
    pub consumed_j: f64,
    pub incident_j: f64,
    pub efficiency: f64,
    pub battery_j: f64,
}

/// Row of `links.csv`, one per user per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub slot: usize,
    pub user: usize,
    pub snr_db: f64,
    pub rate_bps: f64,
    pub qos_met: bool,
}

/// Line of `trace.jsonl`: the geometry a slot's action was applied to, and
/// optionally its channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub slot: usize,
    #[serde(flatten)]
    pub layout: LayoutTrace,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channels: Option<ChannelState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub slot: usize,
    pub reward: f64,
    pub efficiency: f64,
    pub battery_j: f64,
    pub rates: Vec<f64>,
    pub feasible: bool,
}

impl SlotRow {
    pub fn headers(users: usize) -> Vec<String> {
        let mut h: Vec<String> = ["slot", "reward", "efficiency", "battery_j"]
            .map(String::from)
            .to_vec();
        h.extend((0..users).map(|k| format!("rate_user_{k}")));
        h.push("feasible".into());
        h
    }
}

/// Reads rows back from a file written by [`RunDir::write_csv`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(HarnessError::from))
        .collect()
}

/// Slot rows, whose rate columns vary with the user count.
pub fn read_slots(path: &Path) -> Result<Vec<SlotRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let n = rec.len();
        let field = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| {
                HarnessError::Runtime(format!("bad number `{}` in {}", &rec[i], path.display()))
            })
        };
        rows.push(SlotRow {
            slot: field(0)? as usize,
            reward: field(1)?,
            efficiency: field(2)?,
            battery_j: field(3)?,
            rates: (4..n - 1).map(field).collect::<Result<_>>()?,
            feasible: &rec[n - 1] == "true",
        });
    }
    Ok(rows)
}

/// Reads the `config_hash` and `seed` from a row file's comment line.
pub fn read_header(path: &Path) -> Result<(String, u64)> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let line = text.lines().next().unwrap_or_default();
    let mut hash = None;
    let mut seed = None;
    for part in line.trim_start_matches('#').split_whitespace() {
        if let Some(v) = part.strip_prefix("config_hash=") {
            hash = Some(v.to_string());
        } else if let Some(v) = part.strip_prefix("seed=") {
            seed = v.parse().ok();
        }
    }
    match (hash, seed) {
        (Some(h), Some(s)) => Ok((h, s)),
        _ => Err(HarnessError::Runtime(format!(
            "{}: missing config header",
            path.display()
        ))),
    }
}
