//! Realized generalized eluder dimension of recorded stage sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fclass::{FunctionClass, StageDataset, StageModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    /// `dim(F_h, Z_h, sigma_h)` for each stage.
    pub per_stage: Vec<f64>,
    /// Mean of `per_stage` over stages.
    pub aggregate: f64,
    /// Longest sequence length among the stages.
    pub episodes: usize,
    pub alpha: f64,
}

impl DimReport {
    /// `(stage, K, dim)` rows for the harness CSV.
    pub fn rows(&self) -> Vec<(usize, usize, f64)> {
        self.per_stage
            .iter()
            .enumerate()
            .map(|(h, d)| (h, self.episodes, *d))
            .collect()
    }
}

/// Per-summand contributions `min(1, D^2(z_i; z_[i-1]) / sigma_i^2)` of one stage.
pub fn stage_summands(class: &FunctionClass, data: &StageDataset, alpha: f64) -> Result<Vec<f64>> {
    if !class.is_exact() {
        return Err(Error::Unsupported(format!(
            "eluder dimension needs an exact uncertainty oracle; the {} class only approximates it",
            class.name()
        )));
    }
    let mut model = StageModel::new(class, data.lambda())?;
    let mut prefix = data.prefix(0);
    let mut out = Vec::with_capacity(data.len());
    for entry in data.entries() {
        if entry.sigma_bar < alpha {
            return Err(Error::config(format!(
                "sigma_bar {} below alpha {alpha} in stage {}",
                entry.sigma_bar,
                data.stage()
            )));
        }
        let d2 = model.uncertainty_squared(entry.state, entry.action, &prefix)?;
        out.push((d2 / (entry.sigma_bar * entry.sigma_bar)).min(1.0));
        model.observe(entry)?;
        prefix.push(*entry)?;
    }
    Ok(out)
}

pub fn eluder_dim(class: &FunctionClass, stages: &[StageDataset], alpha: f64) -> Result<DimReport> {
    if !(alpha > 0.0) {
        return Err(Error::config(format!("alpha must be > 0, got {alpha}")));
    }
    let per_stage = stages
        .iter()
        .map(|data| Ok(stage_summands(class, data, alpha)?.iter().sum()))
        .collect::<Result<Vec<f64>>>()?;
    let aggregate = if per_stage.is_empty() {
        0.0
    } else {
        per_stage.iter().sum::<f64>() / per_stage.len() as f64
    };
    Ok(DimReport {
        aggregate,
        episodes: stages.iter().map(StageDataset::len).max().unwrap_or(0),
        per_stage,
        alpha,
    })
}
