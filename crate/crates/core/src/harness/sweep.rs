use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::baselines;
use crate::eluder::eluder_dim;
use crate::error::{Error, Result};
use crate::gfarfe::{
    calibrate_betas, calibrate_with_covers, Calibration, ExplorationArtifacts, ExploreConfig,
    Explorer, PlanConfig, Planner,
};
use crate::mdp::{evaluate_policy, value_iteration, RewardFunction, TabularMdp};

pub const CSV_HEADER: [&str; 8] = [
    "seed",
    "explorer",
    "K",
    "reward_id",
    "subopt",
    "dim",
    "sigma_sum",
    "wallclock_s",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub seed: u64,
    pub explorer: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub reward_id: String,
    /// `V*_1(mu; r) - V^pi_1(mu; r)` on the planning scale.
    pub subopt: f64,
    /// Mean realized eluder dimension over stages; NaN for inexact classes.
    pub dim: f64,
    pub sigma_sum: f64,
    #[serde(rename = "wallclock_s")]
    pub wallclock: f64,
}

/// One `(seed, stage, K, dim)` line of `dims.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimRow {
    pub seed: u64,
    pub explorer: String,
    pub stage: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub dim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCalibration {
    pub explorer: String,
    pub seed: u64,
    #[serde(flatten)]
    pub calibration: Calibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub format: String,
    pub rows: usize,
    /// SHA-256 of the metrics CSV with the wallclock column removed.
    pub digest: String,
    pub calibrations: Vec<CellCalibration>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<MetricRow>,
    pub dims: Vec<DimRow>,
    pub artifacts: Vec<(String, u64, PathBuf)>,
    pub summary: SweepSummary,
}

/// Sweep cell: one exploration run that every K of the grid shares.
struct Cell {
    seed: u64,
    explorer: Explorer,
    label: String,
    calibration: Calibration,
}

struct CellOutput {
    rows: Vec<MetricRow>,
    dims: Vec<DimRow>,
    artifacts: ExplorationArtifacts,
}

fn cells(cfg: &ExperimentConfig, env: &TabularMdp) -> Result<Vec<Cell>> {
    let class = cfg.class.build(env.num_states(), env.num_actions())?;
    let scales = &cfg.calibration.scales;
    let mut out = Vec::new();
    for &scale in scales {
        let (epsilon, delta) = (cfg.calibration.epsilon, cfg.calibration.delta);
        let calibration = match cfg.calibration.log_covers {
            Some(c) => {
                calibrate_with_covers(env.horizon(), c.log_n_f, c.log_n_v, epsilon, delta, scale)?
            }
            None => calibrate_betas(&class, env.horizon(), epsilon, delta, scale)?,
        };
        for &seed in &cfg.seeds {
            for &explorer in &cfg.explorers {
                let label = if scales.len() > 1 {
                    format!("{}@{scale}", explorer.as_str())
                } else {
                    explorer.as_str().to_string()
                };
                out.push(Cell {
                    seed,
                    explorer,
                    label,
                    calibration: calibration.clone(),
                });
            }
        }
    }
    Ok(out)
}

fn explore_cell(
    cfg: &ExperimentConfig,
    env: &TabularMdp,
    cell: &Cell,
) -> Result<ExplorationArtifacts> {
    let explore_cfg = ExploreConfig::from_calibration(
        cfg.max_episodes(),
        &cell.calibration,
        cfg.class.clone(),
        cfg.lambda,
        cell.seed,
    );
    let mut artifacts = baselines::run(env, cell.explorer, &explore_cfg)?;
    artifacts.calibration = Some(cell.calibration.clone());
    Ok(artifacts)
}

/// Explore one cell to the largest budget, then plan and evaluate at every K.
fn run_cell(
    cfg: &ExperimentConfig,
    env: &TabularMdp,
    suite: &[(String, RewardFunction, f64)],
    cell: &Cell,
) -> Result<CellOutput> {
    let artifacts = explore_cell(cfg, env, cell)?;
    let class = cfg.class.build(env.num_states(), env.num_actions())?;
    let plan_cfg = PlanConfig::for_artifacts(&artifacts, cell.calibration.beta_p);
    let mut rows = Vec::with_capacity(cfg.k_grid.len() * suite.len());
    let mut dims = Vec::new();
    for &k in &cfg.k_grid {
        let start = Instant::now();
        let snapshot = artifacts.prefix(k);
        let dim = if class.is_exact() {
            let report = eluder_dim(&class, &snapshot.datasets, snapshot.alpha.min(1.0))?;
            dims.extend(report.rows().into_iter().map(|(stage, k, dim)| DimRow {
                seed: cell.seed,
                explorer: cell.label.clone(),
                stage,
                k,
                dim,
            }));
            report.aggregate
        } else {
            f64::NAN
        };
        let sigma_sum = snapshot.sigma_sum();
        let planner = Planner::new(&snapshot, &plan_cfg)?;
        for (id, reward, v_star) in suite {
            let result = planner.plan(reward)?;
            let value = evaluate_policy(env, &reward.for_planning(), &result.policy)?;
            rows.push(MetricRow {
                seed: cell.seed,
                explorer: cell.label.clone(),
                k,
                reward_id: id.clone(),
                subopt: v_star - value,
                dim,
                sigma_sum,
                wallclock: 0.0,
            });
        }
        let per_row = start.elapsed().as_secs_f64() / suite.len().max(1) as f64;
        let n = rows.len();
        rows[n - suite.len()..]
            .iter_mut()
            .for_each(|r| r.wallclock = per_row);
    }
    Ok(CellOutput {
        rows,
        dims,
        artifacts,
    })
}

/// Sort key that makes the output independent of scheduling.
fn canonical(rows: &mut [MetricRow]) {
    rows.sort_by(|a, b| {
        (a.seed, &a.explorer, a.k, &a.reward_id).cmp(&(b.seed, &b.explorer, b.k, &b.reward_id))
    });
}

/// Metrics CSV bytes, header first, even when there are no rows.
pub fn metrics_csv(rows: &[MetricRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| Error::config(format!("csv buffer: {e}")))
}

/// Digest of the metrics with the wallclock column dropped.
pub fn determinism_digest(rows: &[MetricRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&CSV_HEADER[..7])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.explorer.clone(),
            r.k.to_string(),
            r.reward_id.clone(),
            r.subopt.to_string(),
            r.dim.to_string(),
            r.sigma_sum.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::config(format!("csv buffer: {e}")))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Artifact file name for one cell.
pub fn artifact_file_name(label: &str, seed: u64) -> String {
    format!("{label}-seed{seed}.json")
}

/// Explore every `(scale, seed, explorer)` cell to the largest budget and
/// write `env.json` and `artifacts/` under `out_dir`, without planning.
pub fn run_exploration(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<(String, u64, PathBuf)>> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    let cells = cells(cfg, &env)?;
    let artifact_dir = out_dir.join("artifacts");
    std::fs::create_dir_all(&artifact_dir).map_err(|e| Error::io(&artifact_dir, e))?;
    write(&out_dir.join("env.json"), env.to_json()?.as_bytes())?;
    let runs = cells
        .par_iter()
        .map(|cell| explore_cell(cfg, &env, cell))
        .collect::<Result<Vec<_>>>()?;
    let mut paths = Vec::with_capacity(runs.len());
    for (cell, artifacts) in cells.iter().zip(runs) {
        let path = artifact_dir.join(artifact_file_name(&cell.label, cell.seed));
        artifacts.save(&path)?;
        paths.push((cell.label.clone(), cell.seed, path));
    }
    Ok(paths)
}

/// Run every `(scale, seed, explorer)` cell and write `metrics.csv`,
/// `dims.csv`, `summary.json`, `env.json` and `artifacts/` under `out_dir`.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepOutput> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    let suite = cfg
        .reward_suite(&env)?
        .into_iter()
        .map(|(id, r)| {
            let v_star = value_iteration(&env, &r.for_planning())?.initial_value(&env);
            Ok((id, r, v_star))
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = cells(cfg, &env)?;

    let artifact_dir = out_dir.join("artifacts");
    std::fs::create_dir_all(&artifact_dir).map_err(|e| Error::io(&artifact_dir, e))?;
    write(&out_dir.join("env.json"), env.to_json()?.as_bytes())?;

    let outputs = cells
        .par_iter()
        .map(|cell| run_cell(cfg, &env, &suite, cell))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut dims = Vec::new();
    let mut artifacts = Vec::new();
    let mut calibrations = Vec::new();
    for (cell, out) in cells.iter().zip(outputs) {
        let path = artifact_dir.join(artifact_file_name(&cell.label, cell.seed));
        out.artifacts.save(&path)?;
        artifacts.push((cell.label.clone(), cell.seed, path));
        calibrations.push(CellCalibration {
            explorer: cell.label.clone(),
            seed: cell.seed,
            calibration: cell.calibration.clone(),
        });
        rows.extend(out.rows);
        dims.extend(out.dims);
    }
    canonical(&mut rows);
    dims.sort_by(|a, b| {
        (a.seed, &a.explorer, a.k, a.stage).cmp(&(b.seed, &b.explorer, b.k, b.stage))
    });

    write(&out_dir.join("metrics.csv"), &metrics_csv(&rows)?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for d in &dims {
        w.serialize(d)?;
    }
    let dims_bytes = w
        .into_inner()
        .map_err(|e| Error::config(format!("csv buffer: {e}")))?;
    write(&out_dir.join("dims.csv"), &dims_bytes)?;

    let summary = SweepSummary {
        format: "sweep-summary-v1".to_string(),
        rows: rows.len(),
        digest: determinism_digest(&rows)?,
        calibrations,
        config: cfg.clone(),
    };
    write(
        &out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    Ok(SweepOutput {
        rows,
        dims,
        artifacts,
        summary,
    })
}
