use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gfarfe::eluder::eluder_dim;
use gfarfe::gfarfe::{plan, ExplorationArtifacts, PlanConfig, PlanResult};
use gfarfe::harness::{run_exploration, run_sweep, ExperimentConfig};
use gfarfe::mdp::{evaluate_policy, value_iteration, Policy, RewardFunction, TabularMdp};
use gfarfe::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "gfarfe",
    version,
    about = "Reward-free exploration and planning on tabular MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exploration phase of every configured cell and save the artifacts.
    Explore {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this seed only.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plan a policy for one reward from saved artifacts.
    Plan {
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long)]
        reward: PathBuf,
        /// Where the plan JSON goes.
        #[arg(long)]
        out: PathBuf,
        /// Planning radius; defaults to the calibrated one stored in the artifacts, else 1.
        #[arg(long)]
        beta_p: Option<f64>,
    },
    /// Evaluate a policy exactly and report its suboptimality.
    Eval {
        /// A policy document or a plan written by `plan`.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long)]
        reward: PathBuf,
    },
    /// Explore, plan and evaluate over the whole episode grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Realized eluder dimension of saved artifacts.
    Dim {
        #[arg(long)]
        artifacts: PathBuf,
        /// Floor on the weights; defaults to the artifacts' own, capped at 1.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_config(
    path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    let out = out
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| Error::config("no output directory: pass --out or set out_dir"))?;
    Ok((cfg, out))
}

/// Accepts a bare policy or a plan that embeds one.
fn load_policy(path: &Path) -> Result<Policy> {
    let text = read(path)?;
    match serde_json::from_str::<PlanResult>(&text) {
        Ok(result) => Ok(result.policy),
        Err(_) => Ok(serde_json::from_str(&text)?),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Explore { config, out, seed } => {
            let (cfg, out) = load_config(&config, out, seed)?;
            for (label, seed, path) in run_exploration(&cfg, &out)? {
                println!("{label}\t{seed}\t{}", path.display());
            }
        }
        Command::Plan {
            artifacts,
            reward,
            out,
            beta_p,
        } => {
            let art = ExplorationArtifacts::load(&artifacts)?;
            let reward = RewardFunction::from_json(&read(&reward)?)?;
            let beta_p = beta_p
                .or_else(|| art.calibration.as_ref().map(|c| c.beta_p))
                .unwrap_or(1.0);
            let result = plan(&art, &reward, &PlanConfig::for_artifacts(&art, beta_p))?;
            write(&out, &serde_json::to_string(&result)?)?;
        }
        Command::Eval {
            policy,
            mdp,
            reward,
        } => {
            let policy = load_policy(&policy)?;
            let mdp = TabularMdp::from_json(&read(&mdp)?)?;
            let reward = RewardFunction::from_json(&read(&reward)?)?.for_planning();
            let value = evaluate_policy(&mdp, &reward, &policy)?;
            let optimal = value_iteration(&mdp, &reward)?.initial_value(&mdp);
            let report = json!({"value": value, "optimal": optimal, "subopt": optimal - value});
            println!("{report}");
        }
        Command::Sweep { config, out, seed } => {
            let (cfg, out) = load_config(&config, out, seed)?;
            let output = run_sweep(&cfg, &out)?;
            println!(
                "{} rows, digest {}, written to {}",
                output.summary.rows,
                output.summary.digest,
                out.display()
            );
        }
        Command::Dim { artifacts, alpha } => {
            let art = ExplorationArtifacts::load(&artifacts)?;
            let class = art.class.build(art.num_states, art.num_actions)?;
            let report = eluder_dim(&class, &art.datasets, alpha.unwrap_or(art.alpha.min(1.0)))?;
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
