//! Reward-free exploration with uncertainty-aware intrinsic rewards and
//! variance-weighted regression, over exactly solvable tabular MDPs.
//!
//! * [`mdp`]: episodic MDPs, rewards, exact solvers, generators.
//! * [`fclass`]: weighted regression and uncertainty oracles.
//! * [`eluder`]: realized generalized eluder dimension.
//! * [`gfarfe`]: the exploration and planning phases.
//! * [`baselines`]: unweighted, uniform and reward-aware comparators.
//! * [`harness`]: configs, seeded sweeps, metrics and scaling fits.

pub mod baselines;
pub mod eluder;
mod error;
pub mod fclass;
pub mod gfarfe;
pub mod harness;
pub mod mdp;
pub mod rng;

pub use error::{Error, Result};
