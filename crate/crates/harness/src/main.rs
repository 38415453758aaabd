use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uavris_core::agents::AgentKind;
use uavris_core::env::Strategy;
use uavris_harness::config::{ExperimentConfig, OnOff};
use uavris_harness::matrix::{run_matrix, Axes};
use uavris_harness::plot::{emit_plot_data, load_record};
use uavris_harness::run::{run_eval, run_train};
use uavris_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(
    name = "uavris",
    version,
    about = "UAV-RIS energy-harvesting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    agent: Option<AgentKind>,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Renewable source: on or off.
    #[arg(long)]
    re: Option<OnOff>,
    /// Output directory for run folders.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent, one run per seed.
    Train(Common),
    /// Greedy evaluation, from a checkpoint for learning agents.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to `eval_steps` from the config.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Cartesian sweep, e.g. `--axis agent=ee-ddpg,td3 --axis strategy=ts,hera`.
    Matrix {
        #[command(flatten)]
        common: Common,
        #[arg(long = "axis", value_name = "NAME=V1,V2")]
        axes: Vec<String>,
    },
    /// Evaluate the exhaustive-search baseline.
    Exhaustive {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Long-format plot CSVs from finished run directories.
    Plotdata {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, Vec<u64>)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(a) = common.agent {
        cfg.agent_kind = a;
    }
    if let Some(s) = common.strategy {
        cfg.strategy = Some(s);
    }
    if let Some(r) = common.re {
        cfg.renewable = Some(r);
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    let cfg = cfg.resolve()?;
    let seeds = cfg.seeds.clone();
    Ok((cfg, seeds))
}

fn parse_axes(specs: &[String]) -> Result<Axes> {
    let mut axes = Axes::default();
    for spec in specs {
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("axis `{spec}` is not NAME=V1,V2")))?;
        let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
        match name {
            "agent" => axes.agent = values.iter().map(|v| v.parse()).collect::<Result<_, _>>()?,
            "strategy" => {
                axes.strategy = values.iter().map(|v| v.parse()).collect::<Result<_, _>>()?
            }
            "renewable" | "re" => {
                axes.renewable = values.iter().map(|v| v.parse()).collect::<Result<_>>()?
            }
            "users" | "k" => {
                axes.users = values
                    .iter()
                    .map(|v| {
                        v.parse()
                            .map_err(|_| HarnessError::Config(format!("bad user count `{v}`")))
                    })
                    .collect::<Result<_>>()?
            }
            other => return Err(HarnessError::Config(format!("unknown axis `{other}`"))),
        }
    }
    Ok(axes)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let (cfg, seeds) = load(&common)?;
            for seed in seeds {
                let r = run_train(&cfg, seed)?;
                println!(
                    "{}  mean reward {:.4}  final-quartile {:.4}",
                    r.dir.display(),
                    r.summary.mean_reward,
                    r.summary.final_quartile_mean_reward.unwrap_or(0.0)
                );
            }
        }
        Command::Eval {
            common,
            checkpoint,
            steps,
        } => {
            let (cfg, seeds) = load(&common)?;
            let steps = steps.unwrap_or(cfg.eval_steps);
            for seed in seeds {
                let r = run_eval(&cfg, seed, checkpoint.as_deref(), steps)?;
                println!(
                    "{}  mean efficiency {:.4}",
                    r.dir.display(),
                    r.summary.mean_efficiency
                );
            }
        }
        Command::Exhaustive { common, steps } => {
            let (mut cfg, seeds) = load(&common)?;
            cfg.agent_kind = AgentKind::Exhaustive;
            let steps = steps.unwrap_or(cfg.eval_steps);
            for seed in seeds {
                let r = run_eval(&cfg, seed, None, steps)?;
                println!(
                    "{}  mean efficiency {:.4}",
                    r.dir.display(),
                    r.summary.mean_efficiency
                );
            }
        }
        Command::Matrix { common, axes } => {
            let (cfg, _) = load(&common)?;
            let axes = parse_axes(&axes)?;
            let m = run_matrix(&cfg, &axes)?;
            print!("{}", m.table.to_markdown());
            println!("{}", m.dir.display());
            let failed: usize = m.cells.iter().map(|c| c.failures.len()).sum();
            if failed > 0 {
                return Err(HarnessError::Runtime(format!(
                    "{failed} matrix job(s) failed; see cells.json"
                )));
            }
        }
        Command::Plotdata { out, runs } => {
            let records = runs
                .iter()
                .map(|d| load_record(d))
                .collect::<Result<Vec<_>>>()?;
            for p in emit_plot_data(&records, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
