//! Cartesian experiment sweeps and their comparison tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uavris_core::agents::AgentKind;
use uavris_core::env::Strategy;

use crate::config::{ExperimentConfig, OnOff};
use crate::error::{HarnessError, Result};
use crate::run::{run_eval, run_train, Summary, CHECKPOINT_FINAL};
use crate::store::RunDir;

/// Values to sweep. An empty axis keeps the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axes {
    pub agent: Vec<AgentKind>,
    pub strategy: Vec<Strategy>,
    pub renewable: Vec<OnOff>,
    pub users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub agent: String,
    pub strategy: String,
    pub renewable: String,
    pub users: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    /// Evaluation summaries, one per successful seed.
    pub summaries: Vec<Summary>,
    pub failures: Vec<String>,
}

impl CellResult {
    /// Median over seeds of the evaluated mean efficiency.
    pub fn median_efficiency(&self) -> Option<f64> {
        median(self.summaries.iter().map(|s| s.mean_efficiency).collect())
    }
}

pub fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub agent: String,
    pub strategy: String,
    pub renewable: String,
    pub users: usize,
    pub runs: usize,
    pub failures: usize,
    /// Median over seeds; `None` when every seed failed.
    pub median_efficiency: Option<f64>,
}

/// One row per matrix cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<TableRow>,
}

impl ComparisonTable {
    pub fn from_cells(cells: &[CellResult]) -> Self {
        let mut rows: Vec<TableRow> = cells
            .iter()
            .map(|c| TableRow {
                agent: c.cell.agent.clone(),
                strategy: c.cell.strategy.clone(),
                renewable: c.cell.renewable.clone(),
                users: c.cell.users,
                runs: c.summaries.len(),
                failures: c.failures.len(),
                median_efficiency: c.median_efficiency(),
            })
            .collect();
        rows.sort_by(|a, b| {
            (&a.agent, a.users, &a.renewable, &a.strategy).cmp(&(
                &b.agent,
                b.users,
                &b.renewable,
                &b.strategy,
            ))
        });
        Self { rows }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Runtime(e.to_string()))
    }

    /// Pivot with one row per (agent, renewable, K) and one column per
    /// strategy, values in percent.
    pub fn to_markdown(&self) -> String {
        let strategies: BTreeSet<&str> = self.rows.iter().map(|r| r.strategy.as_str()).collect();
        let mut keys: Vec<(&str, usize, &str)> = Vec::new();
        for r in &self.rows {
            let k = (r.agent.as_str(), r.users, r.renewable.as_str());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let mut out = String::from("| Algorithm | K | RE |");
        for s in &strategies {
            let _ = write!(out, " {} |", s.to_uppercase());
        }
        out.push_str("\n|---|---|---|");
        for _ in &strategies {
            out.push_str("---|");
        }
        out.push('\n');
        for (agent, users, re) in keys {
            let _ = write!(out, "| {agent} | {users} | {re} |");
            for s in &strategies {
                let cell = self.rows.iter().find(|r| {
                    r.agent == agent && r.users == users && r.renewable == re && r.strategy == *s
                });
                match cell.and_then(|r| r.median_efficiency) {
                    Some(v) => {
                        let _ = write!(out, " {:.1}% |", v * 100.0);
                    }
                    None if cell.is_some() => out.push_str(" failed |"),
                    None => out.push_str(" |"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn cell_count(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone)]
pub struct MatrixResult {
    pub cells: Vec<CellResult>,
    pub table: ComparisonTable,
    pub dir: std::path::PathBuf,
}

/// Expands `axes` over `base` into concrete configs, in a fixed order.
pub fn expand(base: &ExperimentConfig, axes: &Axes) -> Vec<ExperimentConfig> {
    fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
        if axis.is_empty() {
            vec![base]
        } else {
            axis.to_vec()
        }
    }
    let agents = or_base(&axes.agent, base.agent_kind);
    let strategies = or_base(&axes.strategy, base.strategy.unwrap_or(base.env.strategy));
    let renewables = or_base(
        &axes.renewable,
        base.renewable.unwrap_or(base.env.renewable_enabled.into()),
    );
    let users = or_base(&axes.users, base.env.users);
    let mut out = Vec::new();
    for &a in &agents {
        for &k in &users {
            for &r in &renewables {
                for &s in &strategies {
                    let mut c = base.clone();
                    c.agent_kind = a;
                    c.strategy = Some(s);
                    c.renewable = Some(r);
                    c.env.users = k;
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Trains (when the agent learns) and evaluates the final checkpoint for one
/// seed of one cell.
pub fn run_cell(config: &ExperimentConfig, seed: u64) -> Result<Summary> {
    let checkpoint = if config.agent_kind.learns() {
        Some(run_train(config, seed)?.checkpoint(CHECKPOINT_FINAL))
    } else {
        None
    };
    Ok(run_eval(config, seed, checkpoint.as_deref(), config.eval_steps)?.summary)
}

/// Runs every (cell, seed) pair in parallel. Failures are recorded per cell
/// and do not stop the sweep; the table is built after all jobs finish.
pub fn run_matrix(base: &ExperimentConfig, axes: &Axes) -> Result<MatrixResult> {
    let base = base.resolve()?;
    let configs = expand(&base, axes);
    for c in &configs {
        c.resolve()?;
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| base.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let outcomes: Vec<(usize, u64, Result<Summary>)> = jobs
        .par_iter()
        .map(|&(i, seed)| (i, seed, run_cell(&configs[i], seed)))
        .collect();

    let mut cells: Vec<CellResult> = configs
        .iter()
        .map(|c| {
            let r = c.resolve().expect("validated above");
            CellResult {
                cell: Cell {
                    agent: r.agent_kind.to_string(),
                    strategy: r.env.strategy.to_string(),
                    renewable: OnOff::from(r.env.renewable_enabled).to_string(),
                    users: r.env.users,
                },
                summaries: Vec::new(),
                failures: Vec::new(),
            }
        })
        .collect();
    for (i, seed, outcome) in outcomes {
        match outcome {
            Ok(s) => cells[i].summaries.push(s),
            Err(e) => cells[i].failures.push(format!("seed {seed}: {e}")),
        }
    }

    let table = ComparisonTable::from_cells(&cells);
    let hash = base.config_hash()?;
    let dir = RunDir::create(
        &base.output_dir,
        &format!("matrix-{}", &hash[..12]),
        &hash,
        base.seeds[0],
    )?;
    dir.write_json("axes.json", axes)?;
    dir.write_json("cells.json", &cells)?;
    dir.write("comparison.csv", table.to_csv()?.as_bytes())?;
    dir.write("comparison.md", table.to_markdown().as_bytes())?;
    let dir = dir.finish()?;
    Ok(MatrixResult { cells, table, dir })
}
