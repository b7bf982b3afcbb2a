//! Function classes for weighted regression and their uncertainty oracles.
//!
//! Three realizations share one interface:
//!
//! * **tabular**: one free value per `(s, a)` cell. The weighted fit is a
//!   ridge-shrunk weighted mean per cell and the uncertainty has the closed
//!   form `sqrt(L^2 / (W(z) L^2 + lambda))`, `W(z) = sum_{z_i = z} 1/sigma_i^2`.
//! * **linear**: `f(z) = phi(z)^T theta` with weighted ridge regression and
//!   uncertainty `sqrt(phi^T Lambda^{-1} phi)`.
//! * **ensemble**: bootstrap members with randomized priors; uncertainty is
//!   the spread of member predictions. Only an approximation of the exact
//!   oracle, so it is rejected wherever exactness is required.
//!
//! Datasets are append-only. [`StageModel`] holds the sufficient statistics
//! for one stage and is updated one entry at a time during exploration; the
//! free functions in this module rebuild it from a dataset snapshot.

mod cover;
mod ensemble;
mod linear;
pub mod oracle;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cover::{cover_proxy, log_covering_number, CoverProxy};
pub use linear::{IncrementalGram, LinearFeatures, REFACTOR_INTERVAL};

/// Floor applied to reported uncertainties so the oracle is strictly positive.
pub const MIN_UNCERTAINTY: f64 = 1e-12;

fn default_bound() -> f64 {
    1.0
}

fn default_members() -> usize {
    10
}

fn default_ensemble_scale() -> f64 {
    1.0
}

fn default_resample_ratio() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum FeatureSpec {
    OneHot,
    Random { dim: usize, seed: u64 },
}

impl FeatureSpec {
    pub fn build(&self, num_states: usize, num_actions: usize) -> Result<LinearFeatures> {
        match self {
            FeatureSpec::OneHot => Ok(LinearFeatures::one_hot(num_states, num_actions)),
            FeatureSpec::Random { dim, seed } => {
                LinearFeatures::random(num_states, num_actions, *dim, *seed)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassKind {
    Tabular,
    Linear {
        features: FeatureSpec,
    },
    Ensemble {
        features: FeatureSpec,
        #[serde(default = "default_members")]
        members: usize,
        /// Multiplier `c_ens` on the member spread.
        #[serde(default = "default_ensemble_scale")]
        scale: f64,
        #[serde(default = "default_resample_ratio")]
        resample_ratio: f64,
        #[serde(default)]
        seed: u64,
    },
}

/// Serializable class selector; [`ClassSpec::build`] binds it to an MDP shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    #[serde(flatten)]
    pub kind: ClassKind,
    /// Output range `[0, L]` of fitted functions.
    #[serde(default = "default_bound")]
    pub bound: f64,
}

impl ClassSpec {
    pub fn tabular() -> Self {
        Self {
            kind: ClassKind::Tabular,
            bound: 1.0,
        }
    }

    pub fn linear(features: FeatureSpec) -> Self {
        Self {
            kind: ClassKind::Linear { features },
            bound: 1.0,
        }
    }

    pub fn ensemble(features: FeatureSpec, seed: u64) -> Self {
        Self {
            kind: ClassKind::Ensemble {
                features,
                members: default_members(),
                scale: default_ensemble_scale(),
                resample_ratio: default_resample_ratio(),
                seed,
            },
            bound: 1.0,
        }
    }

    pub fn build(&self, num_states: usize, num_actions: usize) -> Result<FunctionClass> {
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::config(format!(
                "class bound L must be positive, got {}",
                self.bound
            )));
        }
        let realization = match &self.kind {
            ClassKind::Tabular => Realization::Tabular,
            ClassKind::Linear { features } => {
                Realization::Linear(Arc::new(features.build(num_states, num_actions)?))
            }
            ClassKind::Ensemble {
                features,
                members,
                scale,
                resample_ratio,
                seed,
            } => {
                if *members < 2 {
                    return Err(Error::config("ensemble needs at least 2 members"));
                }
                if !(*scale > 0.0) || !(*resample_ratio > 0.0) {
                    return Err(Error::config(
                        "ensemble scale and resample ratio must be positive",
                    ));
                }
                Realization::Ensemble(ensemble::EnsembleParams {
                    features: Arc::new(features.build(num_states, num_actions)?),
                    members: *members,
                    scale: *scale,
                    resample_ratio: *resample_ratio,
                    seed: *seed,
                })
            }
        };
        Ok(FunctionClass {
            num_states,
            num_actions,
            bound: self.bound,
            realization,
        })
    }
}

#[derive(Debug, Clone)]
enum Realization {
    Tabular,
    Linear(Arc<LinearFeatures>),
    Ensemble(ensemble::EnsembleParams),
}

/// A function class bound to a concrete state-action space.
#[derive(Debug, Clone)]
pub struct FunctionClass {
    num_states: usize,
    num_actions: usize,
    bound: f64,
    realization: Realization,
}

impl FunctionClass {
    pub fn tabular(num_states: usize, num_actions: usize, bound: f64) -> Self {
        Self {
            num_states,
            num_actions,
            bound,
            realization: Realization::Tabular,
        }
    }

    pub fn linear(features: LinearFeatures, bound: f64) -> Self {
        Self {
            num_states: features.num_states(),
            num_actions: features.num_actions(),
            bound,
            realization: Realization::Linear(Arc::new(features)),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_cells(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Whether the uncertainty oracle is the exact class width.
    pub fn is_exact(&self) -> bool {
        !matches!(self.realization, Realization::Ensemble(_))
    }

    pub fn name(&self) -> &'static str {
        match self.realization {
            Realization::Tabular => "tabular",
            Realization::Linear(_) => "linear",
            Realization::Ensemble(_) => "ensemble",
        }
    }

    /// Number of free parameters of a fitted function.
    pub fn parameter_count(&self) -> usize {
        match &self.realization {
            Realization::Tabular => self.num_cells(),
            Realization::Linear(f) => f.dim(),
            Realization::Ensemble(p) => p.features.dim(),
        }
    }

    /// Number of free parameters of a bonus function: one weight total per
    /// cell for tabular, a `d x d` inverse Gram matrix otherwise.
    pub fn bonus_parameter_count(&self) -> usize {
        match &self.realization {
            Realization::Tabular => self.num_cells(),
            Realization::Linear(f) => f.dim() * f.dim(),
            Realization::Ensemble(p) => p.features.dim() * p.features.dim(),
        }
    }

    fn cell(&self, state: usize, action: usize) -> usize {
        state * self.num_actions + action
    }

    fn check_entry(&self, entry: &StageEntry) -> Result<()> {
        if entry.state >= self.num_states || entry.action >= self.num_actions {
            return Err(Error::config(format!(
                "dataset entry (s={}, a={}) outside S={} A={}",
                entry.state, entry.action, self.num_states, self.num_actions
            )));
        }
        Ok(())
    }
}

/// One observation `(s, a, s')` with its regression weight parameter
/// `sigma_bar`; the sample enters regressions with weight `1/sigma_bar^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub sigma_bar: f64,
}

impl StageEntry {
    pub fn weight(&self) -> f64 {
        1.0 / (self.sigma_bar * self.sigma_bar)
    }
}

/// Ordered history for one stage. Append-only; the length doubles as a
/// version counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDataset {
    stage: usize,
    lambda: f64,
    /// Lower bound `alpha` every `sigma_bar` must respect.
    floor: f64,
    entries: Vec<StageEntry>,
}

impl StageDataset {
    pub fn new(stage: usize, lambda: f64, floor: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::config(format!(
                "weight floor must be > 0, got {floor}"
            )));
        }
        Ok(Self {
            stage,
            lambda,
            floor,
            entries: Vec::new(),
        })
    }

    pub fn push(&mut self, entry: StageEntry) -> Result<()> {
        if !(entry.sigma_bar.is_finite() && entry.sigma_bar >= self.floor) {
            return Err(Error::config(format!(
                "sigma_bar {} below the floor {}",
                entry.sigma_bar, self.floor
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Copy holding only the first `len` entries.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            entries: self.entries[..len.min(self.entries.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn entries(&self) -> &[StageEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn version(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedParams {
    Tabular {
        num_actions: usize,
        values: Vec<f64>,
    },
    Linear {
        theta: Vec<f64>,
        features: Arc<LinearFeatures>,
    },
    Ensemble {
        thetas: Vec<Vec<f64>>,
        features: Arc<LinearFeatures>,
    },
}

/// A fitted regression function; evaluations are clamped to `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFn {
    format: String,
    bound: f64,
    params: FittedParams,
}

impl FittedFn {
    fn new(bound: f64, params: FittedParams) -> Self {
        Self {
            format: "fclass-v1".to_string(),
            bound,
            params,
        }
    }

    /// Unclamped regression output.
    pub fn raw(&self, state: usize, action: usize) -> f64 {
        match &self.params {
            FittedParams::Tabular {
                num_actions,
                values,
            } => values[state * num_actions + action],
            FittedParams::Linear { theta, features } => dot(features.phi(state, action), theta),
            FittedParams::Ensemble { thetas, features } => {
                let phi = features.phi(state, action);
                thetas.iter().map(|t| dot(phi, t)).sum::<f64>() / thetas.len() as f64
            }
        }
    }

    pub fn eval(&self, state: usize, action: usize) -> f64 {
        self.raw(state, action).clamp(0.0, self.bound)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn params(&self) -> &FittedParams {
        &self.params
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fitted: FittedFn = serde_json::from_str(text)?;
        if fitted.format != "fclass-v1" {
            return Err(Error::config(format!(
                "expected format \"fclass-v1\", found \"{}\"",
                fitted.format
            )));
        }
        Ok(fitted)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
enum Statistics {
    /// Weight total `W(z)` per cell.
    Tabular {
        weight_sums: Vec<f64>,
    },
    Linear {
        gram: IncrementalGram,
    },
    /// Members are refit from the dataset on demand.
    Ensemble,
}

/// Sufficient statistics of one stage's dataset under a class.
#[derive(Debug, Clone)]
pub struct StageModel {
    class: FunctionClass,
    lambda: f64,
    observed: usize,
    stats: Statistics,
}

impl StageModel {
    pub fn new(class: &FunctionClass, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be >= 0, got {lambda}")));
        }
        let stats = match &class.realization {
            Realization::Tabular => Statistics::Tabular {
                weight_sums: vec![0.0; class.num_cells()],
            },
            Realization::Linear(features) => Statistics::Linear {
                gram: IncrementalGram::new(features.dim(), lambda)?,
            },
            Realization::Ensemble(_) => {
                if lambda <= 0.0 {
                    return Err(Error::config("ensemble class needs lambda > 0"));
                }
                Statistics::Ensemble
            }
        };
        Ok(Self {
            class: class.clone(),
            lambda,
            observed: 0,
            stats,
        })
    }

    pub fn from_dataset(class: &FunctionClass, data: &StageDataset) -> Result<Self> {
        let mut model = Self::new(class, data.lambda())?;
        for entry in data.entries() {
            model.observe(entry)?;
        }
        Ok(model)
    }

    pub fn class(&self) -> &FunctionClass {
        &self.class
    }

    /// Number of entries absorbed so far.
    pub fn version(&self) -> usize {
        self.observed
    }

    pub fn observe(&mut self, entry: &StageEntry) -> Result<()> {
        self.class.check_entry(entry)?;
        let weight = entry.weight();
        match &mut self.stats {
            Statistics::Tabular { weight_sums } => {
                weight_sums[self.class.cell(entry.state, entry.action)] += weight;
            }
            Statistics::Linear { gram } => {
                if let Realization::Linear(features) = &self.class.realization {
                    gram.push(features.phi(entry.state, entry.action), weight);
                }
            }
            Statistics::Ensemble => {}
        }
        self.observed += 1;
        Ok(())
    }

    fn check_synced(&self, data: &StageDataset) -> Result<()> {
        if data.len() != self.observed {
            return Err(Error::config(format!(
                "stage model saw {} entries but the dataset has {}",
                self.observed,
                data.len()
            )));
        }
        Ok(())
    }

    /// Uncertainty at one cell. Needs the dataset only for the ensemble class.
    pub fn uncertainty(&self, state: usize, action: usize, data: &StageDataset) -> Result<f64> {
        Ok(self.uncertainty_squared(state, action, data)?.sqrt())
    }

    /// Squared uncertainty at one cell.
    pub fn uncertainty_squared(
        &self,
        state: usize,
        action: usize,
        data: &StageDataset,
    ) -> Result<f64> {
        self.require_positive_lambda()?;
        let bound = self.class.bound;
        let cap = bound * bound / self.lambda;
        let value = match &self.stats {
            Statistics::Tabular { weight_sums } => {
                let w = weight_sums[self.class.cell(state, action)];
                bound * bound / (w * bound * bound + self.lambda)
            }
            Statistics::Linear { gram } => {
                let Realization::Linear(features) = &self.class.realization else {
                    unreachable!("linear statistics pair with the linear realization")
                };
                gram.inverse_quadratic(features.phi(state, action))
            }
            Statistics::Ensemble => {
                let table = self.uncertainty_table(data)?;
                let d = table[self.class.cell(state, action)];
                return Ok(d * d);
            }
        };
        Ok(value.clamp(MIN_UNCERTAINTY * MIN_UNCERTAINTY, cap))
    }

    /// Uncertainty for every cell, indexed `s * A + a`.
    pub fn uncertainty_table(&self, data: &StageDataset) -> Result<Vec<f64>> {
        self.require_positive_lambda()?;
        match &self.class.realization {
            Realization::Ensemble(params) => {
                self.check_synced(data)?;
                Ok(ensemble::uncertainty_table(
                    params,
                    self.class.bound,
                    data,
                    self.class.num_states,
                    self.class.num_actions,
                ))
            }
            _ => (0..self.class.num_states)
                .flat_map(|s| (0..self.class.num_actions).map(move |a| (s, a)))
                .map(|(s, a)| self.uncertainty(s, a, data))
                .collect(),
        }
    }

    fn require_positive_lambda(&self) -> Result<()> {
        if self.lambda <= 0.0 {
            return Err(Error::config(format!(
                "uncertainty needs lambda > 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Weighted least squares with ridge `lambda` on `(entry, target)` pairs.
    pub fn fit(&self, data: &StageDataset, targets: &[f64]) -> Result<FittedFn> {
        self.check_synced(data)?;
        if targets.len() != data.len() {
            return Err(Error::config(format!(
                "{} targets for {} dataset entries",
                targets.len(),
                data.len()
            )));
        }
        if let Some(bad) = targets.iter().find(|t| !t.is_finite()) {
            return Err(Error::config(format!("non-finite regression target {bad}")));
        }
        let bound = self.class.bound;
        let params = match (&self.stats, &self.class.realization) {
            (Statistics::Tabular { weight_sums }, _) => {
                let mut numerators = vec![0.0; weight_sums.len()];
                for (entry, y) in data.entries().iter().zip(targets) {
                    numerators[self.class.cell(entry.state, entry.action)] += entry.weight() * y;
                }
                let values = numerators
                    .iter()
                    .zip(weight_sums)
                    .map(|(num, w)| {
                        let den = w + self.lambda;
                        if den > 0.0 {
                            num / den
                        } else {
                            0.0
                        }
                    })
                    .collect();
                FittedParams::Tabular {
                    num_actions: self.class.num_actions,
                    values,
                }
            }
            (Statistics::Linear { gram }, Realization::Linear(features)) => {
                let mut rhs = DVector::zeros(features.dim());
                for (entry, y) in data.entries().iter().zip(targets) {
                    let phi = features.phi(entry.state, entry.action);
                    for (r, p) in rhs.iter_mut().zip(phi) {
                        *r += entry.weight() * y * p;
                    }
                }
                FittedParams::Linear {
                    theta: gram.solve(&rhs).as_slice().to_vec(),
                    features: Arc::clone(features),
                }
            }
            (Statistics::Ensemble, Realization::Ensemble(params)) => FittedParams::Ensemble {
                thetas: ensemble::fit_members(params, bound, data, targets),
                features: Arc::clone(&params.features),
            },
            _ => unreachable!("statistics always match the class realization"),
        };
        Ok(FittedFn::new(bound, params))
    }
}

/// Weighted regression of `targets` on the dataset's state-action pairs.
pub fn fit_weighted(
    class: &FunctionClass,
    data: &StageDataset,
    targets: &[f64],
) -> Result<FittedFn> {
    StageModel::from_dataset(class, data)?.fit(data, targets)
}

/// Uncertainty oracle `D(z; history)` for a single pair.
pub fn uncertainty(
    class: &FunctionClass,
    state: usize,
    action: usize,
    data: &StageDataset,
) -> Result<f64> {
    StageModel::from_dataset(class, data)?.uncertainty(state, action, data)
}

/// Uncertainty oracle over every pair, indexed `s * A + a`.
pub fn uncertainty_table(class: &FunctionClass, data: &StageDataset) -> Result<Vec<f64>> {
    StageModel::from_dataset(class, data)?.uncertainty_table(data)
}
