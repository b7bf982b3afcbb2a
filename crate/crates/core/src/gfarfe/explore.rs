use rand::Rng;
use serde::{Deserialize, Serialize};

use super::artifacts::{
    ExplorationArtifacts, Explorer, StepRecord, WeightBranch, ARTIFACTS_FORMAT,
};
use super::Calibration;
use crate::error::{Error, Result};
use crate::fclass::{ClassSpec, FittedFn, FunctionClass, StageDataset, StageEntry, StageModel};
use crate::mdp::{sample_initial_state, sample_next_state, TabularMdp};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    /// Episode budget `K`.
    pub episodes: usize,
    pub beta_e: f64,
    /// Floor on `sigma_bar`.
    pub alpha: f64,
    /// Multiplier on the epistemic term `sqrt(D)` in `sigma_bar`.
    pub gamma: f64,
    pub lambda: f64,
    pub class: ClassSpec,
    pub log_n_v: f64,
    pub log_n_f: f64,
    pub seed: u64,
    /// Substream index, so paired runs can share a seed.
    #[serde(default)]
    pub run_index: u64,
}

impl ExploreConfig {
    pub fn from_calibration(
        episodes: usize,
        calibration: &Calibration,
        class: ClassSpec,
        lambda: f64,
        seed: u64,
    ) -> Self {
        Self {
            episodes,
            beta_e: calibration.beta_e,
            alpha: calibration.alpha,
            gamma: calibration.gamma,
            lambda,
            class,
            log_n_v: calibration.log_n_v,
            log_n_f: calibration.log_n_f,
            seed,
            run_index: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.beta_e >= 1.0, "beta_e must be >= 1"),
            (self.alpha > 0.0, "alpha must be > 0"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.lambda > 0.0, "lambda must be > 0"),
            (self.log_n_v >= 0.0, "log_n_v must be >= 0"),
            (self.log_n_f >= 0.0, "log_n_f must be >= 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::config(msg));
            }
        }
        let finite = [
            self.beta_e,
            self.alpha,
            self.gamma,
            self.lambda,
            self.log_n_v,
            self.log_n_f,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("exploration parameters must be finite"));
        }
        Ok(())
    }
}

/// Run the exploration phase for `cfg.episodes` episodes.
///
/// The environment is a bare [`TabularMdp`]: transitions and initial states
/// only, no reward.
pub fn explore(env: &TabularMdp, cfg: &ExploreConfig) -> Result<ExplorationArtifacts> {
    run_explorer(env, cfg, Explorer::Gfarfe)
}

/// Per-stage output of the backward pass of one episode.
struct StagePlan {
    uncertainty: Vec<f64>,
    fitted: FittedFn,
    q: Vec<f64>,
    v: Vec<f64>,
    actions: Vec<usize>,
}

pub(crate) fn run_explorer(
    env: &TabularMdp,
    cfg: &ExploreConfig,
    explorer: Explorer,
) -> Result<ExplorationArtifacts> {
    cfg.validate()?;
    let (s_count, a_count, horizon) = (env.num_states(), env.num_actions(), env.horizon());
    let class = cfg.class.build(s_count, a_count)?;
    let floor = match explorer {
        Explorer::Gfarfe => cfg.alpha,
        Explorer::Unweighted | Explorer::Uniform => cfg.alpha.min(1.0),
    };
    let mut datasets = (0..horizon)
        .map(|h| StageDataset::new(h, cfg.lambda, floor))
        .collect::<Result<Vec<_>>>()?;
    let mut models = (0..horizon)
        .map(|_| StageModel::new(&class, cfg.lambda))
        .collect::<Result<Vec<_>>>()?;

    let mut rollout_rng = substream(cfg.seed, cfg.run_index, "explore-rollout");
    let mut action_rng = substream(cfg.seed, cfg.run_index, "uniform-actions");
    let mut steps = Vec::with_capacity(cfg.episodes * horizon);
    let mut episode_values = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let plans = match explorer {
            Explorer::Uniform => None,
            Explorer::Gfarfe | Explorer::Unweighted => {
                Some(backward_pass(&class, cfg, &datasets, &models)?)
            }
        };

        let mut state = sample_initial_state(env, &mut rollout_rng);
        let first_state = state;
        for h in 0..horizon {
            let record = match &plans {
                None => {
                    let action = action_rng.random_range(0..a_count);
                    unit_record(episode, h, state, action)
                }
                Some(plans) => {
                    weighted_record(cfg, explorer, &plans[h], episode, h, state, a_count)
                }
            };
            let next_state = sample_next_state(env, h, state, record.action, &mut rollout_rng);
            let record = StepRecord {
                next_state,
                ..record
            };
            let entry = StageEntry {
                state,
                action: record.action,
                next_state,
                sigma_bar: record.sigma_bar,
            };
            datasets[h].push(entry)?;
            models[h].observe(&entry)?;
            steps.push(record);
            state = next_state;
        }
        episode_values.push(plans.as_ref().map_or(0.0, |p| p[0].v[first_state]));
    }

    Ok(ExplorationArtifacts {
        format: ARTIFACTS_FORMAT.to_string(),
        explorer,
        num_states: s_count,
        num_actions: a_count,
        horizon,
        class: cfg.class.clone(),
        lambda: cfg.lambda,
        alpha: cfg.alpha,
        beta_e: cfg.beta_e,
        gamma: match explorer {
            Explorer::Gfarfe => cfg.gamma,
            Explorer::Unweighted | Explorer::Uniform => 0.0,
        },
        log_n_v: cfg.log_n_v,
        log_n_f: cfg.log_n_f,
        seed: cfg.seed,
        run_index: cfg.run_index,
        datasets,
        steps,
        episode_values,
        calibration: None,
    })
}

/// Optimistic backward induction on the intrinsic reward `b/2`, stages
/// `H-1..0`, against the data of the previous episodes.
fn backward_pass(
    class: &FunctionClass,
    cfg: &ExploreConfig,
    datasets: &[StageDataset],
    models: &[StageModel],
) -> Result<Vec<StagePlan>> {
    let (s_count, a_count) = (class.num_states(), class.num_actions());
    let horizon = datasets.len();
    let mut plans: Vec<StagePlan> = Vec::with_capacity(horizon);
    let mut next_v = vec![0.0; s_count];
    for h in (0..horizon).rev() {
        let uncertainty = models[h].uncertainty_table(&datasets[h])?;
        // b = 2 beta D and r = b / 2.
        let intrinsic: Vec<f64> = uncertainty.iter().map(|d| cfg.beta_e * d).collect();
        let targets: Vec<f64> = datasets[h]
            .entries()
            .iter()
            .map(|e| intrinsic[e.state * a_count + e.action] + next_v[e.next_state])
            .collect();
        let fitted = models[h].fit(&datasets[h], &targets)?;
        let mut q = vec![0.0; s_count * a_count];
        let mut v = vec![0.0; s_count];
        let mut actions = vec![0; s_count];
        for s in 0..s_count {
            let row = s * a_count..(s + 1) * a_count;
            for a in 0..a_count {
                q[s * a_count + a] =
                    (fitted.eval(s, a) + 2.0 * intrinsic[s * a_count + a]).min(1.0);
            }
            actions[s] = most_uncertain_argmax(&q[row.clone()], &uncertainty[row]);
            v[s] = q[s * a_count + actions[s]];
        }
        next_v.clone_from(&v);
        plans.push(StagePlan {
            uncertainty,
            fitted,
            q,
            v,
            actions,
        });
    }
    plans.reverse();
    Ok(plans)
}

/// Maximizer of `q`; ties go to the larger uncertainty, then the lowest index.
fn most_uncertain_argmax(q: &[f64], uncertainty: &[f64]) -> usize {
    let mut best = 0;
    for a in 1..q.len() {
        if q[a] > q[best] || (q[a] == q[best] && uncertainty[a] > uncertainty[best]) {
            best = a;
        }
    }
    best
}

fn weighted_record(
    cfg: &ExploreConfig,
    explorer: Explorer,
    plan: &StagePlan,
    episode: usize,
    stage: usize,
    state: usize,
    a_count: usize,
) -> StepRecord {
    let action = plan.actions[state];
    let cell = state * a_count + action;
    let uncertainty = plan.uncertainty[cell];
    let intrinsic_reward = cfg.beta_e * uncertainty;
    let fitted_value = plan.fitted.eval(state, action);
    let sigma = 2.0 * (cfg.log_n_v * fitted_value.min(1.0)).sqrt();
    let (sigma_bar, branch) = match explorer {
        Explorer::Gfarfe => {
            let epistemic = cfg.gamma * uncertainty.sqrt();
            if epistemic >= sigma && epistemic >= cfg.alpha {
                (epistemic, WeightBranch::Epistemic)
            } else if sigma >= cfg.alpha {
                (sigma, WeightBranch::Aleatoric)
            } else {
                (cfg.alpha, WeightBranch::Floor)
            }
        }
        Explorer::Unweighted | Explorer::Uniform => (1.0, WeightBranch::Unit),
    };
    StepRecord {
        episode,
        stage,
        state,
        action,
        next_state: 0,
        uncertainty,
        bonus: 2.0 * intrinsic_reward,
        intrinsic_reward,
        fitted_value,
        q_value: plan.q[cell],
        v_value: plan.v[state],
        sigma,
        sigma_bar,
        branch,
    }
}

fn unit_record(episode: usize, stage: usize, state: usize, action: usize) -> StepRecord {
    StepRecord {
        episode,
        stage,
        state,
        action,
        next_state: 0,
        uncertainty: 0.0,
        bonus: 0.0,
        intrinsic_reward: 0.0,
        fitted_value: 0.0,
        q_value: 0.0,
        v_value: 0.0,
        sigma: 0.0,
        sigma_bar: 1.0,
        branch: WeightBranch::Unit,
    }
}
