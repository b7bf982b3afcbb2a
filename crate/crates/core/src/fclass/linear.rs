use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Refactorize the Gram matrix from scratch after this many rank-1 updates.
pub const REFACTOR_INTERVAL: usize = 64;

const NORM_SLACK: f64 = 1e-12;

/// Feature map over a finite state-action space, `||phi(s,a)||_2 <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFeatures {
    dim: usize,
    num_states: usize,
    num_actions: usize,
    /// Flat `[S][A][d]`.
    rows: Vec<f64>,
}

impl LinearFeatures {
    pub fn new(num_states: usize, num_actions: usize, dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("feature dimension must be >= 1"));
        }
        if rows.len() != num_states * num_actions * dim {
            return Err(Error::config(format!(
                "feature table has {} entries, expected S*A*d = {}",
                rows.len(),
                num_states * num_actions * dim
            )));
        }
        for (cell, phi) in rows.chunks(dim).enumerate() {
            let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > 1.0 + NORM_SLACK {
                return Err(Error::config(format!(
                    "feature of cell {cell} has norm {norm} > 1"
                )));
            }
        }
        Ok(Self {
            dim,
            num_states,
            num_actions,
            rows,
        })
    }

    /// `phi(s,a) = e_{s*A + a}`, so `d = S*A`.
    pub fn one_hot(num_states: usize, num_actions: usize) -> Self {
        let dim = num_states * num_actions;
        let mut rows = vec![0.0; dim * dim];
        for cell in 0..dim {
            rows[cell * dim + cell] = 1.0;
        }
        Self {
            dim,
            num_states,
            num_actions,
            rows,
        }
    }

    /// Gaussian directions with norms drawn uniformly from [0.5, 1].
    pub fn random(num_states: usize, num_actions: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, 0, "features");
        let mut rows = Vec::with_capacity(num_states * num_actions * dim);
        for _ in 0..num_states * num_actions {
            let raw: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = raw
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let target = rng.random_range(0.5..=1.0);
            rows.extend(raw.iter().map(|x| x * target / norm));
        }
        Self::new(num_states, num_actions, dim, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn phi(&self, state: usize, action: usize) -> &[f64] {
        let o = (state * self.num_actions + action) * self.dim;
        &self.rows[o..o + self.dim]
    }
}

/// `Lambda = lambda*I + sum_i w_i phi_i phi_i^T`, kept as a Cholesky factor
/// that absorbs each new sample by a rank-1 update.
#[derive(Debug, Clone)]
pub struct IncrementalGram {
    lambda: f64,
    gram: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    since_refactor: usize,
}

impl IncrementalGram {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!(
                "ridge regularizer must be > 0 for the linear class, got {lambda}"
            )));
        }
        let gram = DMatrix::identity(dim, dim) * lambda;
        let factor = Cholesky::new(gram.clone()).expect("lambda*I is positive definite");
        Ok(Self {
            lambda,
            gram,
            factor,
            since_refactor: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn push(&mut self, phi: &[f64], weight: f64) {
        let x = DVector::from_column_slice(phi);
        self.gram.ger(weight, &x, &x, 1.0);
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.refactor();
        } else {
            self.factor.rank_one_update(&x, weight);
        }
    }

    fn refactor(&mut self) {
        self.factor = Cholesky::new(self.gram.clone())
            .expect("Gram matrix with lambda > 0 stays positive definite");
        self.since_refactor = 0;
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(rhs)
    }

    /// `phi^T Lambda^{-1} phi`.
    pub fn inverse_quadratic(&self, phi: &[f64]) -> f64 {
        let x = DVector::from_column_slice(phi);
        let solved = self.factor.solve(&x);
        x.dot(&solved).max(0.0)
    }

    /// The explicitly accumulated Gram matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gram
    }
}
