//! Exact episodic MDPs with stage-indexed transitions, reward functions, and
//! the backward-induction solvers used as ground truth everywhere else.
//!
//! Stages are 0-based in code: a horizon-`H` MDP has stages `0..H`, and value
//! tables carry an extra terminal row `H` that is identically zero.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{sample_index, substream, StreamRng};

const ROW_TOLERANCE: f64 = 1e-9;
const MDP_FORMAT: &str = "mdp-v1";

/// Time-inhomogeneous episodic MDP without rewards.
///
/// Exploration code receives only this type, so it has no way to observe a
/// reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// Flat `[H][S][A][S]`.
    transitions: Vec<f64>,
    initial: Vec<f64>,
}

impl TabularMdp {
    /// Build from a flat `[H][S][A][S]` transition tensor and an initial
    /// distribution. Rows within 1e-9 of the simplex are renormalized; anything
    /// further off is rejected.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        mut transitions: Vec<f64>,
        mut initial: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::config(format!(
                "S, A, H must all be >= 1 (got S={num_states}, A={num_actions}, H={horizon})"
            )));
        }
        let expected = horizon * num_states * num_actions * num_states;
        if transitions.len() != expected {
            return Err(Error::config(format!(
                "transition tensor has {} entries, expected H*S*A*S = {expected}",
                transitions.len()
            )));
        }
        if initial.len() != num_states {
            return Err(Error::config(format!(
                "initial distribution has {} entries, expected S = {num_states}",
                initial.len()
            )));
        }
        for (row_index, row) in transitions.chunks_mut(num_states).enumerate() {
            let h = row_index / (num_states * num_actions);
            let s = (row_index / num_actions) % num_states;
            let a = row_index % num_actions;
            normalize_row(row)
                .map_err(|msg| Error::Distribution(format!("P[h={h}][s={s}][a={a}]: {msg}")))?;
        }
        normalize_row(&mut initial)
            .map_err(|msg| Error::Distribution(format!("initial distribution: {msg}")))?;
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            transitions,
            initial,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    /// Next-state distribution `P_h(. | s, a)`.
    pub fn next_distribution(&self, stage: usize, state: usize, action: usize) -> &[f64] {
        let offset =
            ((stage * self.num_states + state) * self.num_actions + action) * self.num_states;
        &self.transitions[offset..offset + self.num_states]
    }

    /// `sum_{s'} P_h(s'|s,a) v(s')`.
    pub fn expect(&self, stage: usize, state: usize, action: usize, values: &[f64]) -> f64 {
        self.next_distribution(stage, state, action)
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn normalize_row(row: &mut [f64]) -> std::result::Result<(), String> {
    if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("entry {bad} is negative or not finite"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(format!("row sums to {sum}, not 1"));
    }
    row.iter_mut().for_each(|p| *p /= sum);
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct MdpDocument {
    format: String,
    #[serde(rename = "S")]
    num_states: usize,
    #[serde(rename = "A")]
    num_actions: usize,
    #[serde(rename = "H")]
    horizon: usize,
    #[serde(rename = "P")]
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
    mu: Vec<f64>,
}

impl From<TabularMdp> for MdpDocument {
    fn from(mdp: TabularMdp) -> Self {
        let s = mdp.num_states;
        let a = mdp.num_actions;
        let transitions = mdp
            .transitions
            .chunks(s * a * s)
            .map(|stage| {
                stage
                    .chunks(a * s)
                    .map(|state| state.chunks(s).map(<[f64]>::to_vec).collect())
                    .collect()
            })
            .collect();
        MdpDocument {
            format: MDP_FORMAT.to_string(),
            num_states: s,
            num_actions: a,
            horizon: mdp.horizon,
            transitions,
            mu: mdp.initial,
        }
    }
}

impl TryFrom<MdpDocument> for TabularMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        if doc.format != MDP_FORMAT {
            return Err(Error::config(format!(
                "expected format \"{MDP_FORMAT}\", found \"{}\"",
                doc.format
            )));
        }
        let (s, a, h) = (doc.num_states, doc.num_actions, doc.horizon);
        let shape_ok = doc.transitions.len() == h
            && doc.transitions.iter().all(|stage| {
                stage.len() == s
                    && stage
                        .iter()
                        .all(|state| state.len() == a && state.iter().all(|row| row.len() == s))
            });
        if !shape_ok {
            return Err(Error::config(format!(
                "P must be nested [H={h}][S={s}][A={a}][S={s}]"
            )));
        }
        let flat = doc
            .transitions
            .into_iter()
            .flatten()
            .flatten()
            .flatten()
            .collect();
        TabularMdp::new(s, a, h, flat, doc.mu)
    }
}

/// How a reward function is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// Every trajectory collects total reward at most 1.
    TotalBounded,
    /// Each entry lies in [0, 1]; divided by `H` before planning.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RewardDocument", into = "RewardDocument")]
pub struct RewardFunction {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// Flat `[H][S][A]`.
    values: Vec<f64>,
    mode: ScaleMode,
}

impl RewardFunction {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        values: Vec<f64>,
        mode: ScaleMode,
    ) -> Result<Self> {
        if values.len() != horizon * num_states * num_actions {
            return Err(Error::config(format!(
                "reward tensor has {} entries, expected H*S*A = {}",
                values.len(),
                horizon * num_states * num_actions
            )));
        }
        if let Some(bad) = values.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::config(format!("reward entry {bad} outside [0, 1]")));
        }
        Ok(Self {
            num_states,
            num_actions,
            horizon,
            values,
            mode,
        })
    }

    pub fn zeros(mdp: &TabularMdp, mode: ScaleMode) -> Self {
        let n = mdp.horizon() * mdp.num_states() * mdp.num_actions();
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            horizon: mdp.horizon(),
            values: vec![0.0; n],
            mode,
        }
    }

    /// Reward 1 for being in `state` at `stage` (any action), 0 elsewhere.
    pub fn goal(mdp: &TabularMdp, stage: usize, state: usize) -> Result<Self> {
        if stage >= mdp.horizon() || state >= mdp.num_states() {
            return Err(Error::config(format!(
                "goal (h={stage}, s={state}) outside H={} S={}",
                mdp.horizon(),
                mdp.num_states()
            )));
        }
        let mut reward = Self::zeros(mdp, ScaleMode::TotalBounded);
        for a in 0..mdp.num_actions() {
            let i = reward.index(stage, state, a);
            reward.values[i] = 1.0;
        }
        Ok(reward)
    }

    /// Uniform `[0,1]` draws in per-step mode.
    pub fn random(mdp: &TabularMdp, rng: &mut StreamRng) -> Self {
        let n = mdp.horizon() * mdp.num_states() * mdp.num_actions();
        let values = (0..n).map(|_| rng.random::<f64>()).collect();
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            horizon: mdp.horizon(),
            values,
            mode: ScaleMode::PerStep,
        }
    }

    fn index(&self, stage: usize, state: usize, action: usize) -> usize {
        (stage * self.num_states + state) * self.num_actions + action
    }

    pub fn get(&self, stage: usize, state: usize, action: usize) -> f64 {
        self.values[self.index(stage, state, action)]
    }

    pub fn mode(&self) -> ScaleMode {
        self.mode
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|r| *r == 0.0)
    }

    /// The reward fed to planning: per-step rewards are divided by `H`,
    /// total-bounded rewards pass through.
    pub fn for_planning(&self) -> RewardFunction {
        match self.mode {
            ScaleMode::TotalBounded => self.clone(),
            ScaleMode::PerStep => {
                let scale = 1.0 / self.horizon as f64;
                RewardFunction {
                    values: self.values.iter().map(|r| r * scale).collect(),
                    mode: ScaleMode::TotalBounded,
                    ..self.clone()
                }
            }
        }
    }

    pub fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if (self.horizon, self.num_states, self.num_actions)
            != (mdp.horizon(), mdp.num_states(), mdp.num_actions())
        {
            return Err(Error::config(format!(
                "reward shape (H={}, S={}, A={}) does not match MDP (H={}, S={}, A={})",
                self.horizon,
                self.num_states,
                self.num_actions,
                mdp.horizon(),
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        Ok(())
    }

    /// Shape check plus the mode invariant. Total-bounded rewards must collect
    /// at most 1 along every feasible trajectory.
    pub fn validate_for(&self, mdp: &TabularMdp) -> Result<()> {
        self.check_shape(mdp)?;
        if self.mode == ScaleMode::TotalBounded {
            let max_total = max_total_reward(mdp, self);
            if max_total > 1.0 + ROW_TOLERANCE {
                return Err(Error::config(format!(
                    "total-bounded reward collects up to {max_total} along some trajectory"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct RewardDocument {
    format: String,
    mode: ScaleMode,
    /// Nested `[H][S][A]`.
    r: Vec<Vec<Vec<f64>>>,
}

impl From<RewardFunction> for RewardDocument {
    fn from(reward: RewardFunction) -> Self {
        let (s, a) = (reward.num_states, reward.num_actions);
        RewardDocument {
            format: "reward-v1".to_string(),
            mode: reward.mode,
            r: reward
                .values
                .chunks(s * a)
                .map(|stage| stage.chunks(a).map(<[f64]>::to_vec).collect())
                .collect(),
        }
    }
}

impl TryFrom<RewardDocument> for RewardFunction {
    type Error = Error;

    fn try_from(doc: RewardDocument) -> Result<Self> {
        if doc.format != "reward-v1" {
            return Err(Error::config(format!(
                "expected format \"reward-v1\", found \"{}\"",
                doc.format
            )));
        }
        let h = doc.r.len();
        let s = doc.r.first().map_or(0, Vec::len);
        let a = doc.r.first().and_then(|x| x.first()).map_or(0, Vec::len);
        if h == 0
            || s == 0
            || a == 0
            || !doc
                .r
                .iter()
                .all(|st| st.len() == s && st.iter().all(|row| row.len() == a))
        {
            return Err(Error::config(
                "reward r must be a non-empty nested [H][S][A] array",
            ));
        }
        let flat = doc.r.into_iter().flatten().flatten().collect();
        RewardFunction::new(s, a, h, flat, doc.mode)
    }
}

/// Largest total reward along any trajectory with positive probability:
/// backward induction with the expectation over next states replaced by a max
/// over the support.
pub fn max_total_reward(mdp: &TabularMdp, reward: &RewardFunction) -> f64 {
    let s_count = mdp.num_states();
    let mut next = vec![0.0; s_count];
    for h in (0..mdp.horizon()).rev() {
        let current: Vec<f64> = (0..s_count)
            .map(|s| {
                (0..mdp.num_actions())
                    .map(|a| {
                        let best_next = mdp
                            .next_distribution(h, s, a)
                            .iter()
                            .zip(&next)
                            .filter(|(p, _)| **p > 0.0)
                            .map(|(_, v)| *v)
                            .fold(f64::NEG_INFINITY, f64::max);
                        reward.get(h, s, a) + best_next
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        next = current;
    }
    mdp.initial_distribution()
        .iter()
        .zip(&next)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Deterministic stage-dependent policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyDocument", into = "PolicyDocument")]
pub struct Policy {
    num_states: usize,
    num_actions: usize,
    /// Flat `[H][S]`.
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(num_states: usize, num_actions: usize, actions: Vec<usize>) -> Result<Self> {
        if num_states == 0 || actions.is_empty() || !actions.len().is_multiple_of(num_states) {
            return Err(Error::config(format!(
                "policy table of {} entries is not a multiple of S = {num_states}",
                actions.len()
            )));
        }
        if let Some(bad) = actions.iter().find(|a| **a >= num_actions) {
            return Err(Error::config(format!(
                "policy action {bad} >= A = {num_actions}"
            )));
        }
        Ok(Self {
            num_states,
            num_actions,
            actions,
        })
    }

    /// `action` at every stage and state.
    pub fn constant(mdp: &TabularMdp, action: usize) -> Result<Self> {
        Self::new(
            mdp.num_states(),
            mdp.num_actions(),
            vec![action; mdp.horizon() * mdp.num_states()],
        )
    }

    pub fn action(&self, stage: usize, state: usize) -> usize {
        self.actions[stage * self.num_states + state]
    }

    pub fn horizon(&self) -> usize {
        self.actions.len() / self.num_states
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn check_shape(&self, mdp: &TabularMdp) -> Result<()> {
        if (self.horizon(), self.num_states, self.num_actions)
            != (mdp.horizon(), mdp.num_states(), mdp.num_actions())
        {
            return Err(Error::config(format!(
                "policy shape (H={}, S={}, A={}) does not match MDP (H={}, S={}, A={})",
                self.horizon(),
                self.num_states,
                self.num_actions,
                mdp.horizon(),
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PolicyDocument {
    format: String,
    #[serde(rename = "A")]
    num_actions: usize,
    /// Nested `[H][S]`.
    actions: Vec<Vec<usize>>,
}

impl From<Policy> for PolicyDocument {
    fn from(policy: Policy) -> Self {
        PolicyDocument {
            format: "policy-v1".to_string(),
            num_actions: policy.num_actions,
            actions: policy
                .actions
                .chunks(policy.num_states)
                .map(<[usize]>::to_vec)
                .collect(),
        }
    }
}

impl TryFrom<PolicyDocument> for Policy {
    type Error = Error;

    fn try_from(doc: PolicyDocument) -> Result<Self> {
        if doc.format != "policy-v1" {
            return Err(Error::config(format!(
                "expected format \"policy-v1\", found \"{}\"",
                doc.format
            )));
        }
        let s = doc.actions.first().map_or(0, Vec::len);
        if !doc.actions.iter().all(|row| row.len() == s) {
            return Err(Error::config(
                "policy actions must be a rectangular [H][S] array",
            ));
        }
        Policy::new(
            s,
            doc.num_actions,
            doc.actions.into_iter().flatten().collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueFlavor {
    Optimal,
    TruncatedOptimal,
    Policy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTables {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    /// Flat `[H+1][S]`; the last row is the zero terminal value.
    v: Vec<f64>,
    /// Flat `[H][S][A]`.
    q: Vec<f64>,
    pub flavor: ValueFlavor,
}

impl ValueTables {
    fn zeros(mdp: &TabularMdp, flavor: ValueFlavor) -> Self {
        let (s, a, h) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
        Self {
            num_states: s,
            num_actions: a,
            horizon: h,
            v: vec![0.0; (h + 1) * s],
            q: vec![0.0; h * s * a],
            flavor,
        }
    }

    pub fn v(&self, stage: usize, state: usize) -> f64 {
        self.v[stage * self.num_states + state]
    }

    pub fn q(&self, stage: usize, state: usize, action: usize) -> f64 {
        self.q[(stage * self.num_states + state) * self.num_actions + action]
    }

    /// Row `V_h(.)`.
    pub fn v_stage(&self, stage: usize) -> &[f64] {
        &self.v[stage * self.num_states..(stage + 1) * self.num_states]
    }

    pub fn q_stage_state(&self, stage: usize, state: usize) -> &[f64] {
        let o = (stage * self.num_states + state) * self.num_actions;
        &self.q[o..o + self.num_actions]
    }

    /// `E_{s ~ mu} V_0(s)`.
    pub fn initial_value(&self, mdp: &TabularMdp) -> f64 {
        dot(mdp.initial_distribution(), self.v_stage(0))
    }

    /// Greedy policy over `Q`, lowest action index on ties.
    pub fn greedy_policy(&self) -> Policy {
        let actions = (0..self.horizon)
            .flat_map(|h| (0..self.num_states).map(move |s| (h, s)))
            .map(|(h, s)| argmax(self.q_stage_state(h, s)))
            .collect();
        Policy {
            num_states: self.num_states,
            num_actions: self.num_actions,
            actions,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn backward_induction(
    mdp: &TabularMdp,
    reward: &RewardFunction,
    flavor: ValueFlavor,
    clip: Option<f64>,
) -> ValueTables {
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let mut tables = ValueTables::zeros(mdp, flavor);
    for h in (0..mdp.horizon()).rev() {
        let next: Vec<f64> = tables.v_stage(h + 1).to_vec();
        for s in 0..s_count {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_count {
                let mut q = reward.get(h, s, a) + mdp.expect(h, s, a, &next);
                if let Some(cap) = clip {
                    q = q.min(cap);
                }
                tables.q[(h * s_count + s) * a_count + a] = q;
                best = best.max(q);
            }
            tables.v[h * s_count + s] = best;
        }
    }
    tables
}

/// Exact `V*`, `Q*` by backward induction.
pub fn value_iteration(mdp: &TabularMdp, reward: &RewardFunction) -> Result<ValueTables> {
    reward.validate_for(mdp)?;
    Ok(backward_induction(mdp, reward, ValueFlavor::Optimal, None))
}

/// Truncated optimal values: every stage's Q is clipped at 1 before the max.
/// The reward need not be total-bounded.
pub fn truncated_value_iteration(mdp: &TabularMdp, reward: &RewardFunction) -> Result<ValueTables> {
    reward.check_shape(mdp)?;
    Ok(backward_induction(
        mdp,
        reward,
        ValueFlavor::TruncatedOptimal,
        Some(1.0),
    ))
}

/// `V^pi`, `Q^pi` tables for a deterministic policy.
pub fn policy_value_tables(
    mdp: &TabularMdp,
    reward: &RewardFunction,
    policy: &Policy,
) -> Result<ValueTables> {
    reward.check_shape(mdp)?;
    policy.check_shape(mdp)?;
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let mut tables = ValueTables::zeros(mdp, ValueFlavor::Policy);
    for h in (0..mdp.horizon()).rev() {
        let next: Vec<f64> = tables.v_stage(h + 1).to_vec();
        for s in 0..s_count {
            for a in 0..a_count {
                tables.q[(h * s_count + s) * a_count + a] =
                    reward.get(h, s, a) + mdp.expect(h, s, a, &next);
            }
            tables.v[h * s_count + s] = tables.q(h, s, policy.action(h, s));
        }
    }
    Ok(tables)
}

/// `E_{s_1 ~ mu}[V_1^pi(s_1; r)]`.
pub fn evaluate_policy(mdp: &TabularMdp, reward: &RewardFunction, policy: &Policy) -> Result<f64> {
    Ok(policy_value_tables(mdp, reward, policy)?.initial_value(mdp))
}

/// One step of a sampled trajectory. `stage` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub stage: usize,
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
}

pub fn sample_initial_state(mdp: &TabularMdp, rng: &mut StreamRng) -> usize {
    sample_index(mdp.initial_distribution(), rng.random::<f64>())
}

pub fn sample_next_state(
    mdp: &TabularMdp,
    stage: usize,
    state: usize,
    action: usize,
    rng: &mut StreamRng,
) -> usize {
    sample_index(
        mdp.next_distribution(stage, state, action),
        rng.random::<f64>(),
    )
}

/// Sample one length-`H` trajectory of `policy`, starting from `mu`.
pub fn rollout(mdp: &TabularMdp, policy: &Policy, rng: &mut StreamRng) -> Vec<Transition> {
    let mut state = sample_initial_state(mdp, rng);
    (0..mdp.horizon())
        .map(|stage| {
            let action = policy.action(stage, state);
            let next_state = sample_next_state(mdp, stage, state, action, rng);
            let step = Transition {
                stage,
                state,
                action,
                next_state,
            };
            state = next_state;
            step
        })
        .collect()
}

/// Random MDP whose transition rows are symmetric Dirichlet(`concentration`)
/// draws, with a uniform initial distribution.
pub fn make_random_mdp(
    seed: u64,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    concentration: f64,
) -> Result<TabularMdp> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::config(format!(
            "Dirichlet concentration must be positive and finite, got {concentration}"
        )));
    }
    if num_states == 0 {
        return Err(Error::config("S must be >= 1"));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::config(format!("gamma({concentration}): {e}")))?;
    let mut rng = substream(seed, 0, "random-mdp");
    let rows = horizon * num_states * num_actions;
    let mut transitions = Vec::with_capacity(rows * num_states);
    for _ in 0..rows {
        let mut row: Vec<f64> = (0..num_states).map(|_| gamma.sample(&mut rng)).collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            row.iter_mut().for_each(|p| *p /= sum);
        } else {
            // Tiny concentrations can underflow every gamma draw; the limit is a vertex.
            let vertex = rng.random_range(0..num_states);
            row = (0..num_states)
                .map(|i| f64::from(u8::from(i == vertex)))
                .collect();
        }
        transitions.extend(row);
    }
    let initial = vec![1.0 / num_states as f64; num_states];
    TabularMdp::new(num_states, num_actions, horizon, transitions, initial)
}

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// RiverSwim-style chain of `length` states starting at state 0. `RIGHT`
/// advances with probability `1 - slip` and otherwise stays; `LEFT` retreats
/// deterministically. Both ends are walls.
pub fn make_chain_mdp(length: usize, horizon: usize, slip: f64) -> Result<TabularMdp> {
    if length == 0 {
        return Err(Error::config("chain length must be >= 1"));
    }
    if !(0.0..0.5).contains(&slip) {
        return Err(Error::config(format!(
            "slip must lie in [0, 0.5), got {slip}"
        )));
    }
    if horizon < length {
        return Err(Error::config(format!(
            "horizon {horizon} shorter than chain length {length}"
        )));
    }
    let s_count = length;
    let mut transitions = vec![0.0; horizon * s_count * 2 * s_count];
    for h in 0..horizon {
        for s in 0..s_count {
            let base = (h * s_count + s) * 2 * s_count;
            transitions[base + LEFT * s_count + s.saturating_sub(1)] += 1.0;
            let right = base + RIGHT * s_count;
            transitions[right + (s + 1).min(s_count - 1)] += 1.0 - slip;
            transitions[right + s] += slip;
        }
    }
    let mut initial = vec![0.0; s_count];
    initial[0] = 1.0;
    TabularMdp::new(s_count, 2, horizon, transitions, initial)
}

/// Two-branch MDP with one noisy and one near-deterministic branch.
///
/// State 0 is the root. Action 0 enters the noisy branch, whose states
/// `1..=width` are left through near-uniform next-state noise (mixing weight
/// `noise`). Action 1 enters the quiet branch, states `width+1..=2*width`,
/// where every action lands on its intended successor with probability
/// `1 - quiet_noise`. Inside a branch the action selects the next branch state
/// (`(s + a) mod width` within the branch), so reaching a given branch state at
/// a given stage requires a specific action sequence.
pub fn make_two_branch_mdp(
    width: usize,
    horizon: usize,
    noise: f64,
    quiet_noise: f64,
) -> Result<TabularMdp> {
    if width < 2 {
        return Err(Error::config("branch width must be >= 2"));
    }
    if horizon < 2 {
        return Err(Error::config("two-branch MDP needs H >= 2"));
    }
    for (name, p) in [("noise", noise), ("quiet_noise", quiet_noise)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("{name} must lie in [0, 1], got {p}")));
        }
    }
    let s_count = 1 + 2 * width;
    let a_count = 2;
    let mut transitions = vec![0.0; horizon * s_count * a_count * s_count];
    for h in 0..horizon {
        for s in 0..s_count {
            for a in 0..a_count {
                let row =
                    &mut transitions[((h * s_count + s) * a_count + a) * s_count..][..s_count];
                let (first, mix) = if s == 0 {
                    // Root: the action picks the branch; land on its first state.
                    (1 + a * width, 0.0)
                } else {
                    let branch = (s - 1) / width;
                    let offset = (s - 1) % width;
                    let mix = if branch == 0 { noise } else { quiet_noise };
                    (1 + branch * width + (offset + a) % width, mix)
                };
                let branch_start = if first <= width { 1 } else { 1 + width };
                row[first] += 1.0 - mix;
                for p in &mut row[branch_start..branch_start + width] {
                    *p += mix / width as f64;
                }
            }
        }
    }
    let mut initial = vec![0.0; s_count];
    initial[0] = 1.0;
    TabularMdp::new(s_count, a_count, horizon, transitions, initial)
}
