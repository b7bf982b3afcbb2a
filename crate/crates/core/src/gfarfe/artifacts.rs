use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Calibration;
use crate::error::{Error, Result};
use crate::fclass::{ClassSpec, StageDataset};
use crate::mdp::Transition;

pub const ARTIFACTS_FORMAT: &str = "gfarfe-artifacts-v1";

/// Which exploration strategy produced a set of artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Explorer {
    /// Uncertainty-weighted exploration.
    Gfarfe,
    /// Same control flow with every `sigma_bar` forced to 1.
    Unweighted,
    /// Uniformly random actions.
    Uniform,
}

impl Explorer {
    pub fn as_str(self) -> &'static str {
        match self {
            Explorer::Gfarfe => "gfarfe",
            Explorer::Unweighted => "unweighted",
            Explorer::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for Explorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gfarfe" => Ok(Explorer::Gfarfe),
            "unweighted" => Ok(Explorer::Unweighted),
            "uniform" => Ok(Explorer::Uniform),
            other => Err(Error::config(format!(
                "unknown explorer \"{other}\" (expected gfarfe, unweighted or uniform)"
            ))),
        }
    }
}

/// Which term attained the max in `sigma_bar = max{gamma sqrt(D), sigma, alpha}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightBranch {
    Epistemic,
    Aleatoric,
    Floor,
    /// Weight forced to 1 by the explorer.
    Unit,
}

/// Everything computed at the visited pair of episode `k`, stage `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub stage: usize,
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    /// Oracle uncertainty against the data before this episode.
    pub uncertainty: f64,
    pub bonus: f64,
    pub intrinsic_reward: f64,
    pub fitted_value: f64,
    pub q_value: f64,
    /// `V_{k,h}(s_h^k)`.
    pub v_value: f64,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub branch: WeightBranch,
}

/// Output of the exploration phase and input of planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationArtifacts {
    pub format: String,
    pub explorer: Explorer,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub class: ClassSpec,
    pub lambda: f64,
    pub alpha: f64,
    pub beta_e: f64,
    pub gamma: f64,
    pub log_n_v: f64,
    pub log_n_f: f64,
    pub seed: u64,
    pub run_index: u64,
    /// One dataset per stage, each with one entry per episode.
    pub datasets: Vec<StageDataset>,
    /// Episode-major log, `H` records per episode.
    pub steps: Vec<StepRecord>,
    /// `V_{k,1}(s_1^k)` per episode.
    pub episode_values: Vec<f64>,
    /// Radii the run was calibrated with, when it went through calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

impl ExplorationArtifacts {
    pub fn episodes(&self) -> usize {
        self.episode_values.len()
    }

    /// Artifacts as they stood after the first `episodes` episodes.
    pub fn prefix(&self, episodes: usize) -> Self {
        let k = episodes.min(self.episodes());
        Self {
            datasets: self.datasets.iter().map(|d| d.prefix(k)).collect(),
            steps: self.steps[..k * self.horizon].to_vec(),
            episode_values: self.episode_values[..k].to_vec(),
            ..self.clone()
        }
    }

    pub fn trajectory(&self, episode: usize) -> Vec<Transition> {
        self.steps[episode * self.horizon..(episode + 1) * self.horizon]
            .iter()
            .map(|r| Transition {
                stage: r.stage,
                state: r.state,
                action: r.action,
                next_state: r.next_state,
            })
            .collect()
    }

    /// `sum_{k,h} sigma_{k,h}^2`.
    pub fn sigma_sum(&self) -> f64 {
        self.steps.iter().map(|r| r.sigma * r.sigma).sum()
    }

    /// Consistency of a deserialized checkpoint.
    pub fn validate(&self) -> Result<()> {
        if self.format != ARTIFACTS_FORMAT {
            return Err(Error::config(format!(
                "expected format \"{ARTIFACTS_FORMAT}\", found \"{}\"",
                self.format
            )));
        }
        let k = self.episodes();
        if self.datasets.len() != self.horizon
            || self.datasets.iter().any(|d| d.len() != k)
            || self.steps.len() != k * self.horizon
        {
            return Err(Error::config(
                "artifact datasets, step log and episode values disagree on K or H",
            ));
        }
        if self.steps.iter().any(|r| {
            r.state >= self.num_states
                || r.next_state >= self.num_states
                || r.action >= self.num_actions
        }) {
            return Err(Error::config("artifact step outside the declared S and A"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifacts: Self = serde_json::from_str(text)?;
        artifacts.validate()?;
        Ok(artifacts)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
