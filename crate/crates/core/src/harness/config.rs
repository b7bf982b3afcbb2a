use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fclass::ClassSpec;
use crate::gfarfe::Explorer;
use crate::mdp::{
    make_chain_mdp, make_random_mdp, make_two_branch_mdp, RewardFunction, ScaleMode, TabularMdp,
};
use crate::rng::substream;

/// Environment generator and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum EnvSpec {
    Chain {
        length: usize,
        horizon: usize,
        #[serde(default)]
        slip: f64,
    },
    Random {
        seed: u64,
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default = "default_concentration")]
        concentration: f64,
    },
    TwoBranch {
        width: usize,
        horizon: usize,
        noise: f64,
        #[serde(default)]
        quiet_noise: f64,
    },
    /// An `mdp-v1` document on disk.
    File { path: PathBuf },
}

fn default_concentration() -> f64 {
    1.0
}

impl EnvSpec {
    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            EnvSpec::Chain {
                length,
                horizon,
                slip,
            } => make_chain_mdp(*length, *horizon, *slip),
            EnvSpec::Random {
                seed,
                states,
                actions,
                horizon,
                concentration,
            } => make_random_mdp(*seed, *states, *actions, *horizon, *concentration),
            EnvSpec::TwoBranch {
                width,
                horizon,
                noise,
                quiet_noise,
            } => make_two_branch_mdp(*width, *horizon, *noise, *quiet_noise),
            EnvSpec::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                TabularMdp::from_json(&text)
            }
        }
    }
}

/// One entry of the reward suite. Suites expand to several rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RewardSpec {
    /// A goal reward for every `(h, s)`, or only for the listed stages.
    GoalSuite {
        #[serde(default)]
        stages: Option<Vec<usize>>,
    },
    Goal {
        stage: usize,
        state: usize,
    },
    /// `count` uniform per-step rewards drawn from `seed`.
    Random {
        count: usize,
        seed: u64,
        #[serde(default = "default_random_mode")]
        mode: ScaleMode,
    },
    /// A `reward-v1` document on disk.
    File {
        path: PathBuf,
        #[serde(default)]
        id: Option<String>,
    },
}

fn default_random_mode() -> ScaleMode {
    ScaleMode::PerStep
}

fn goal_id(stage: usize, state: usize) -> String {
    format!("goal-h{stage}-s{state}")
}

impl RewardSpec {
    /// `(reward_id, reward)` pairs, each checked against `mdp`.
    pub fn expand(&self, mdp: &TabularMdp) -> Result<Vec<(String, RewardFunction)>> {
        let rewards = match self {
            RewardSpec::GoalSuite { stages } => {
                let stages = stages
                    .clone()
                    .unwrap_or_else(|| (0..mdp.horizon()).collect());
                let mut out = Vec::with_capacity(stages.len() * mdp.num_states());
                for h in stages {
                    for s in 0..mdp.num_states() {
                        out.push((goal_id(h, s), RewardFunction::goal(mdp, h, s)?));
                    }
                }
                out
            }
            RewardSpec::Goal { stage, state } => {
                vec![(
                    goal_id(*stage, *state),
                    RewardFunction::goal(mdp, *stage, *state)?,
                )]
            }
            RewardSpec::Random { count, seed, mode } => (0..*count)
                .map(|i| {
                    let mut rng = substream(*seed, i as u64, "reward");
                    let drawn = RewardFunction::random(mdp, &mut rng);
                    let reward = match mode {
                        ScaleMode::PerStep => drawn,
                        // Divide by H so the total stays within 1.
                        ScaleMode::TotalBounded => {
                            let scaled = drawn.for_planning();
                            RewardFunction::new(
                                mdp.num_states(),
                                mdp.num_actions(),
                                mdp.horizon(),
                                scaled.values().to_vec(),
                                ScaleMode::TotalBounded,
                            )?
                        }
                    };
                    Ok((format!("random-{seed}-{i}"), reward))
                })
                .collect::<Result<Vec<_>>>()?,
            RewardSpec::File { path, id } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let id = id.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned())
                });
                vec![(id, RewardFunction::from_json(&text)?)]
            }
        };
        for (id, r) in &rewards {
            r.validate_for(mdp)
                .map_err(|e| Error::config(format!("rewards: {id}: {e}")))?;
        }
        Ok(rewards)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub epsilon: f64,
    pub delta: f64,
    /// Multipliers on the plug-in radii; each one is a separate sweep cell.
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    /// Fixed log covering numbers used instead of the proxies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_covers: Option<LogCovers>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCovers {
    pub log_n_f: f64,
    pub log_n_v: f64,
}

fn default_scales() -> Vec<f64> {
    vec![1.0]
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
            scales: default_scales(),
            log_covers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    #[serde(default = "default_explorers")]
    pub explorers: Vec<Explorer>,
    #[serde(default = "ClassSpec::tabular")]
    pub class: ClassSpec,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub k_grid: Vec<usize>,
    #[serde(default)]
    pub rewards: Vec<RewardSpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_explorers() -> Vec<Explorer> {
    vec![Explorer::Gfarfe]
}

fn default_lambda() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Replace the seed list by a single seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        self
    }

    pub fn max_episodes(&self) -> usize {
        self.k_grid.last().copied().unwrap_or(0)
    }

    /// Checks that do not need the environment. Reward invariants are
    /// checked when the suite is expanded against it.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::config(format!("{name}: {msg}")));
        if self.k_grid.is_empty() {
            return field("k_grid", "must not be empty".into());
        }
        if self.k_grid[0] == 0 {
            return field("k_grid", "counts must be >= 1".into());
        }
        if let Some(w) = self.k_grid.windows(2).find(|w| w[0] >= w[1]) {
            return field(
                "k_grid",
                format!(
                    "must be strictly increasing ({} followed by {})",
                    w[0], w[1]
                ),
            );
        }
        if self.seeds.is_empty() {
            return field("seeds", "need at least one seed".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return field("seeds", "duplicate seed".into());
        }
        if self.explorers.is_empty() {
            return field("explorers", "need at least one explorer".into());
        }
        if self.explorers.iter().collect::<BTreeSet<_>>().len() != self.explorers.len() {
            return field("explorers", "duplicate explorer".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return field("lambda", format!("must be > 0, got {}", self.lambda));
        }
        let cal = &self.calibration;
        if !(cal.epsilon > 0.0 && cal.epsilon <= 1.0) {
            return field(
                "calibration.epsilon",
                format!("must lie in (0, 1], got {}", cal.epsilon),
            );
        }
        if !(cal.delta > 0.0 && cal.delta < 1.0) {
            return field(
                "calibration.delta",
                format!("must lie in (0, 1), got {}", cal.delta),
            );
        }
        if cal.scales.is_empty() {
            return field("calibration.scales", "need at least one scale".into());
        }
        if let Some(s) = cal.scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return field("calibration.scales", format!("must be > 0, got {s}"));
        }
        if let Some(c) = cal.log_covers {
            if !(c.log_n_f >= 0.0 && c.log_n_v >= c.log_n_f && c.log_n_v.is_finite()) {
                return field(
                    "calibration.log_covers",
                    format!(
                        "need 0 <= log_n_f <= log_n_v, got {} and {}",
                        c.log_n_f, c.log_n_v
                    ),
                );
            }
        }
        for spec in &self.rewards {
            if let RewardSpec::Random { count: 0, .. } = spec {
                return field("rewards", "random reward count must be >= 1".into());
            }
        }
        Ok(())
    }

    /// The whole reward suite, with ids checked for uniqueness.
    pub fn reward_suite(&self, mdp: &TabularMdp) -> Result<Vec<(String, RewardFunction)>> {
        let mut suite = Vec::new();
        for spec in &self.rewards {
            suite.extend(spec.expand(mdp)?);
        }
        let mut seen = BTreeSet::new();
        if let Some((id, _)) = suite.iter().find(|(id, _)| !seen.insert(id.clone())) {
            return Err(Error::config(format!("rewards: duplicate reward id {id}")));
        }
        Ok(suite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{
                "env": {"generator": "chain", "length": 3, "horizon": 4, "slip": 0.1},
                "k_grid": [4, 8],
                "rewards": [{"kind": "goal-suite"}, {"kind": "random", "count": 2, "seed": 5}],
                "seeds": [0, 1]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = base();
        assert_eq!(cfg.explorers, vec![Explorer::Gfarfe]);
        assert_eq!(cfg.class, ClassSpec::tabular());
        assert_eq!(cfg.lambda, 1.0);
        assert_eq!(cfg.calibration.scales, vec![1.0]);
        assert_eq!(cfg.max_episodes(), 8);
    }

    #[test]
    fn suite_expands_with_ids() {
        let cfg = base();
        let mdp = cfg.env.build().unwrap();
        let suite = cfg.reward_suite(&mdp).unwrap();
        assert_eq!(suite.len(), 4 * 3 + 2);
        assert_eq!(suite[0].0, "goal-h0-s0");
        assert_eq!(suite[13].0, "random-5-1");
        assert_eq!(suite[13].1.mode(), ScaleMode::PerStep);
    }

    #[test]
    fn field_level_messages() {
        let mut cfg = base();
        cfg.k_grid = vec![8, 8];
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("k_grid"), "{msg}");
        let mut cfg = base();
        cfg.seeds.clear();
        assert!(cfg.validate().unwrap_err().to_string().contains("seeds"));
        let mut cfg = base();
        cfg.calibration.scales = vec![0.0];
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("calibration.scales"));
    }

    #[test]
    fn out_of_range_goal_is_rejected() {
        let mut cfg = base();
        cfg.rewards = vec![RewardSpec::Goal { stage: 9, state: 0 }];
        let mdp = cfg.env.build().unwrap();
        assert!(matches!(cfg.reward_suite(&mdp), Err(Error::Config(_))));
    }

    #[test]
    fn total_bounded_random_rewards_respect_the_bound() {
        let mut cfg = base();
        cfg.rewards = vec![RewardSpec::Random {
            count: 3,
            seed: 1,
            mode: ScaleMode::TotalBounded,
        }];
        let mdp = cfg.env.build().unwrap();
        assert_eq!(cfg.reward_suite(&mdp).unwrap().len(), 3);
    }
}
