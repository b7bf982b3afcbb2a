use serde::{Deserialize, Serialize};

use super::ExplorationArtifacts;
use crate::error::{Error, Result};
use crate::fclass::{ClassSpec, StageModel};
use crate::mdp::{argmax, Policy, RewardFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub beta_p: f64,
    pub lambda: f64,
    pub class: ClassSpec,
}

impl PlanConfig {
    /// Planning settings matching the class and regularizer of `artifacts`.
    pub fn for_artifacts(artifacts: &ExplorationArtifacts, beta_p: f64) -> Self {
        Self {
            beta_p,
            lambda: artifacts.lambda,
            class: artifacts.class.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub format: String,
    pub policy: Policy,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// Flat `[H+1][S]`, last row zero.
    v: Vec<f64>,
    /// Flat `[H][S][A]`.
    q: Vec<f64>,
    /// Flat `[H][S][A]`, `min{beta_P D, 1}`.
    bonuses: Vec<f64>,
}

impl PlanResult {
    pub fn v(&self, stage: usize, state: usize) -> f64 {
        self.v[stage * self.num_states + state]
    }

    pub fn q(&self, stage: usize, state: usize, action: usize) -> f64 {
        self.q[(stage * self.num_states + state) * self.num_actions + action]
    }

    pub fn bonus(&self, stage: usize, state: usize, action: usize) -> f64 {
        self.bonuses[(stage * self.num_states + state) * self.num_actions + action]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

/// Planning state for one artifact snapshot. Bonuses depend only on the
/// data, so they are computed once and shared by every reward planned here.
#[derive(Debug, Clone)]
pub struct Planner<'a> {
    artifacts: &'a ExplorationArtifacts,
    models: Vec<StageModel>,
    /// Per stage, `min{beta_P D, 1}` indexed `s * A + a`.
    bonuses: Vec<Vec<f64>>,
}

impl<'a> Planner<'a> {
    pub fn new(artifacts: &'a ExplorationArtifacts, cfg: &PlanConfig) -> Result<Self> {
        if !(cfg.beta_p >= 1.0 && cfg.beta_p.is_finite()) {
            return Err(Error::config(format!(
                "beta_p must be >= 1, got {}",
                cfg.beta_p
            )));
        }
        if cfg.class != artifacts.class {
            return Err(Error::config(
                "planning class differs from the class the artifacts were collected with",
            ));
        }
        if let Some(d) = artifacts.datasets.iter().find(|d| d.lambda() != cfg.lambda) {
            return Err(Error::config(format!(
                "planning lambda {} differs from the dataset lambda {}",
                cfg.lambda,
                d.lambda()
            )));
        }
        let class = cfg
            .class
            .build(artifacts.num_states, artifacts.num_actions)?;
        let models = artifacts
            .datasets
            .iter()
            .map(|d| StageModel::from_dataset(&class, d))
            .collect::<Result<Vec<_>>>()?;
        let bonuses = models
            .iter()
            .zip(&artifacts.datasets)
            .map(|(m, d)| {
                Ok(m.uncertainty_table(d)?
                    .into_iter()
                    .map(|u| (cfg.beta_p * u).min(1.0))
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            artifacts,
            models,
            bonuses,
        })
    }

    pub fn plan(&self, reward: &RewardFunction) -> Result<PlanResult> {
        let art = self.artifacts;
        let (s_count, a_count, horizon) = (art.num_states, art.num_actions, art.horizon);
        if reward.values().len() != horizon * s_count * a_count || reward.horizon() != horizon {
            return Err(Error::config(format!(
                "reward shape does not match artifacts (H={horizon}, S={s_count}, A={a_count})"
            )));
        }
        let reward = reward.for_planning();
        let mut v = vec![0.0; (horizon + 1) * s_count];
        let mut q = vec![0.0; horizon * s_count * a_count];
        let mut actions = vec![0; horizon * s_count];
        for h in (0..horizon).rev() {
            let data = &art.datasets[h];
            let (head, tail) = v.split_at_mut((h + 1) * s_count);
            let next_v = &tail[..s_count];
            let targets: Vec<f64> = data
                .entries()
                .iter()
                .map(|e| reward.get(h, e.state, e.action) + next_v[e.next_state])
                .collect();
            let fitted = self.models[h].fit(data, &targets)?;
            let v_h = &mut head[h * s_count..];
            let mut raw = vec![0.0; a_count];
            for s in 0..s_count {
                let row = &mut q[(h * s_count + s) * a_count..][..a_count];
                for (a, (q_sa, x)) in row.iter_mut().zip(&mut raw).enumerate() {
                    *x = fitted.eval(s, a) + self.bonuses[h][s * a_count + a];
                    *q_sa = x.min(1.0);
                }
                let best = argmax(&raw);
                actions[h * s_count + s] = best;
                v_h[s] = row[best];
            }
        }
        Ok(PlanResult {
            format: "gfarfe-plan-v1".to_string(),
            policy: Policy::new(s_count, a_count, actions)?,
            num_states: s_count,
            num_actions: a_count,
            horizon,
            v,
            q,
            bonuses: self.bonuses.concat(),
        })
    }
}

/// Planning phase: optimistic weighted-regression backward induction on the
/// recorded data for a given reward. Per-step rewards are divided by `H`
/// first. No environment is involved.
pub fn plan(
    artifacts: &ExplorationArtifacts,
    reward: &RewardFunction,
    cfg: &PlanConfig,
) -> Result<PlanResult> {
    Planner::new(artifacts, cfg)?.plan(reward)
}
