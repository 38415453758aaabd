//! Long-format plot data; no rendering.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::run::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

fn series_name(r: &RunRecord) -> String {
    r.dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| r.summary.agent.clone())
}

/// Reward per episode for training records.
pub fn reward_points(records: &[RunRecord]) -> Vec<PlotPoint> {
    let mut pts = Vec::new();
    for r in records.iter().filter(|r| !r.episodes.is_empty()) {
        let name = series_name(r);
        let mut rows: Vec<PlotPoint> = r
            .episodes
            .iter()
            .map(|e| PlotPoint {
                series: name.clone(),
                x: e.episode as f64,
                y: e.ret,
            })
            .collect();
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        pts.extend(rows);
    }
    pts
}

/// EH efficiency per step for records with slot rows.
pub fn efficiency_points(records: &[RunRecord]) -> Vec<PlotPoint> {
    let mut pts = Vec::new();
    for r in records.iter().filter(|r| !r.slots.is_empty()) {
        let name = series_name(r);
        let mut rows: Vec<PlotPoint> = r
            .slots
            .iter()
            .map(|s| PlotPoint {
                series: name.clone(),
                x: s.slot as f64,
                y: s.reward,
            })
            .collect();
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        pts.extend(rows);
    }
    pts
}

fn write_points(path: &Path, pts: &[PlotPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;
    for p in pts {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Writes `reward_vs_episode.csv` and `efficiency_vs_step.csv` into
/// `out_dir`; files without any series are skipped.
pub fn emit_plot_data(records: &[RunRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(HarnessError::Config(
            "plot data needs at least one run".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, pts) in [
        ("reward_vs_episode.csv", reward_points(records)),
        ("efficiency_vs_step.csv", efficiency_points(records)),
    ] {
        if !pts.is_empty() {
            let p = out_dir.join(name);
            write_points(&p, &pts)?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Loads a finished run directory back into a record.
pub fn load_record(dir: &Path) -> Result<RunRecord> {
    let summary = serde_json::from_str(
        &std::fs::read_to_string(dir.join("summary.json"))
            .map_err(|e| HarnessError::io(dir.join("summary.json"), e))?,
    )?;
    let episodes_path = dir.join("episodes.csv");
    let slots_path = dir.join("slots.csv");
    Ok(RunRecord {
        dir: dir.to_path_buf(),
        summary,
        episodes: if episodes_path.exists() {
            crate::store::read_csv(&episodes_path)?
        } else {
            Vec::new()
        },
        slots: if slots_path.exists() {
            crate::store::read_slots(&slots_path)?
        } else {
            Vec::new()
        },
    })
}
