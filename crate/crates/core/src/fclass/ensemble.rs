//! Bootstrap ensemble of linear ridge members with randomized priors.
//!
//! Member `j` solves
//!
//! ```text
//! min_theta  sum_i c_ij w_i (phi_i^T theta - y_i - eps_ij)^2 + lambda ||theta - theta0_j||^2
//! ```
//!
//! where `c_ij` are bootstrap multiplicities, `eps_ij ~ N(0, L^2 sigma_bar_i^2)`
//! perturbs targets and `theta0_j ~ N(0, L^2/lambda I)` is the random
//! initialization. The member spread at `z` then tracks
//! `sqrt(phi^T Lambda^{-1} phi)` without ever forming the exact oracle. All
//! randomness is drawn from a stream keyed by (seed, stage, dataset length),
//! so the oracle is a pure function of the dataset snapshot.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{LinearFeatures, StageDataset, MIN_UNCERTAINTY};
use crate::rng::substream;

#[derive(Debug, Clone)]
pub(super) struct EnsembleParams {
    pub features: Arc<LinearFeatures>,
    pub members: usize,
    pub scale: f64,
    pub resample_ratio: f64,
    pub seed: u64,
}

struct Perturbation {
    counts: Vec<f64>,
    noise: Vec<f64>,
    prior: DVector<f64>,
}

fn perturbations(params: &EnsembleParams, bound: f64, data: &StageDataset) -> Vec<Perturbation> {
    let n = data.len();
    let dim = params.features.dim();
    let run = ((data.stage() as u64) << 40) | n as u64;
    let mut rng = substream(params.seed, run, "ensemble");
    let draws = (params.resample_ratio * n as f64).round() as usize;
    let prior_std = bound / data.lambda().sqrt();
    (0..params.members)
        .map(|_| {
            let mut counts = vec![0.0; n];
            for _ in 0..draws {
                counts[rng.random_range(0..n)] += 1.0;
            }
            let noise = data
                .entries()
                .iter()
                .map(|e| bound * e.sigma_bar * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let prior =
                DVector::from_fn(dim, |_, _| prior_std * rng.sample::<f64, _>(StandardNormal));
            Perturbation {
                counts,
                noise,
                prior,
            }
        })
        .collect()
}

fn solve_member(
    params: &EnsembleParams,
    data: &StageDataset,
    targets: Option<&[f64]>,
    pert: &Perturbation,
) -> DVector<f64> {
    let dim = params.features.dim();
    let lambda = data.lambda();
    let mut gram = DMatrix::identity(dim, dim) * lambda;
    let mut rhs = &pert.prior * lambda;
    for (i, entry) in data.entries().iter().enumerate() {
        let c = pert.counts[i];
        if c == 0.0 {
            continue;
        }
        let phi = DVector::from_column_slice(params.features.phi(entry.state, entry.action));
        let w = c * entry.weight();
        gram.ger(w, &phi, &phi, 1.0);
        let y = targets.map_or(0.0, |t| t[i]) + pert.noise[i];
        rhs.axpy(w * y, &phi, 1.0);
    }
    Cholesky::new(gram)
        .expect("ridge Gram matrix with lambda > 0 is positive definite")
        .solve(&rhs)
}

pub(super) fn fit_members(
    params: &EnsembleParams,
    bound: f64,
    data: &StageDataset,
    targets: &[f64],
) -> Vec<Vec<f64>> {
    perturbations(params, bound, data)
        .iter()
        .map(|p| {
            solve_member(params, data, Some(targets), p)
                .as_slice()
                .to_vec()
        })
        .collect()
}

/// `c_ens` times the sample standard deviation of member predictions, capped
/// at the prior width `L / sqrt(lambda)`.
pub(super) fn uncertainty_table(
    params: &EnsembleParams,
    bound: f64,
    data: &StageDataset,
    num_states: usize,
    num_actions: usize,
) -> Vec<f64> {
    let thetas: Vec<DVector<f64>> = perturbations(params, bound, data)
        .iter()
        .map(|p| solve_member(params, data, None, p))
        .collect();
    let cap = bound / data.lambda().sqrt();
    let m = thetas.len() as f64;
    (0..num_states)
        .flat_map(|s| (0..num_actions).map(move |a| (s, a)))
        .map(|(s, a)| {
            let phi = DVector::from_column_slice(params.features.phi(s, a));
            let preds: Vec<f64> = thetas.iter().map(|t| phi.dot(t)).collect();
            let mean = preds.iter().sum::<f64>() / m;
            let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (m - 1.0);
            (params.scale * var.sqrt()).clamp(MIN_UNCERTAINTY, cap)
        })
        .collect()
}
