//! Reward-free exploration with uncertainty-weighted regression.
//!
//! [`explore`] runs the reward-free exploration phase against a
//! [`TabularMdp`](crate::mdp::TabularMdp), which carries no reward at all. [`plan`] then turns the
//! recorded [`ExplorationArtifacts`] plus any reward function into a greedy
//! policy without touching the environment.

mod artifacts;
mod calibrate;
mod explore;
mod plan;

pub use artifacts::{ExplorationArtifacts, Explorer, StepRecord, WeightBranch, ARTIFACTS_FORMAT};
pub use calibrate::{calibrate_betas, calibrate_with_covers, Calibration};
pub(crate) use explore::run_explorer;
pub use explore::{explore, ExploreConfig};
pub use plan::{plan, PlanConfig, PlanResult, Planner};
