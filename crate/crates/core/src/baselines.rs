//! Comparators that switch off one ingredient of the weighted explorer at a
//! time. All of them go through the same exploration and planning code.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fclass::ClassSpec;
use crate::gfarfe::{
    run_explorer, ExplorationArtifacts, ExploreConfig, Explorer, PlanConfig, Planner,
};
use crate::mdp::{evaluate_policy, rollout, RewardFunction, TabularMdp};
use crate::rng::substream;

/// Exploration with every `sigma_bar` fixed to 1 and no epistemic term.
pub fn explore_unweighted(env: &TabularMdp, cfg: &ExploreConfig) -> Result<ExplorationArtifacts> {
    run_explorer(env, cfg, Explorer::Unweighted)
}

/// Uniformly random actions for `episodes` episodes, recorded with unit weights.
pub fn explore_uniform(
    env: &TabularMdp,
    episodes: usize,
    seed: u64,
    class: ClassSpec,
    lambda: f64,
) -> Result<ExplorationArtifacts> {
    let cfg = ExploreConfig {
        episodes,
        beta_e: 1.0,
        alpha: 1.0,
        gamma: 0.0,
        lambda,
        class,
        log_n_v: 0.0,
        log_n_f: 0.0,
        seed,
        run_index: 0,
    };
    run_explorer(env, &cfg, Explorer::Uniform)
}

/// Dispatch on an [`Explorer`] tag.
pub fn run(
    env: &TabularMdp,
    explorer: Explorer,
    cfg: &ExploreConfig,
) -> Result<ExplorationArtifacts> {
    run_explorer(env, cfg, explorer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkylineConfig {
    pub plan: PlanConfig,
    pub seed: u64,
    #[serde(default)]
    pub run_index: u64,
}

/// Reward-aware optimistic reference. Each episode plans on the true reward
/// with the same bonuses as the planning phase, records the exact value of
/// that policy, then executes it and adds the episode with unit weight.
pub fn skyline_ucb(
    env: &TabularMdp,
    reward: &RewardFunction,
    episodes: usize,
    cfg: &SkylineConfig,
) -> Result<Vec<f64>> {
    reward.validate_for(env)?;
    // Zero-episode artifacts give the dataset layout; episodes are appended in place.
    let mut artifacts = explore_uniform(env, 0, cfg.seed, cfg.plan.class.clone(), cfg.plan.lambda)?;
    artifacts.explorer = Explorer::Gfarfe;
    let planning_reward = reward.for_planning();
    let mut rng = substream(cfg.seed, cfg.run_index, "skyline-rollout");
    let mut curve = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let result = Planner::new(&artifacts, &cfg.plan)?.plan(reward)?;
        curve.push(evaluate_policy(env, &planning_reward, &result.policy)?);
        for step in rollout(env, &result.policy, &mut rng) {
            artifacts.datasets[step.stage].push(crate::fclass::StageEntry {
                state: step.state,
                action: step.action,
                next_state: step.next_state,
                sigma_bar: 1.0,
            })?;
        }
    }
    Ok(curve)
}
