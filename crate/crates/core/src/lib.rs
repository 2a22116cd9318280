//! Simulation framework for a reputation-driven, cheating-resilient
//! incentive scheme in mobile crowdsensing.
//!
//! A task's life: users holding a recent sample apply with their
//! reputation ([`recruitment`]), employees report (possibly cheated)
//! observations ([`adversary`]), the server discovers the truth and each
//! report's contribution ([`truth`]), then pays and re-rates every employee
//! ([`payback`]). [`engine`] drives tasks over a [`trace`], and [`report`]
//! turns runs into metric series and disturbance summaries.

pub mod adversary;
pub mod engine;
pub mod error;
pub mod parallel;
pub mod payback;
pub mod recruitment;
pub mod report;
pub mod reputation;
pub mod rng;
pub mod sweep;
pub mod trace;
pub mod truth;

pub use engine::{run_scenario, ScenarioConfig, SimResult, TaskOutcome};
pub use error::{CriError, Result};
pub use parallel::Execution;
pub use reputation::{Contribution, IncentiveParams, Payback, Reputation, UserId};
