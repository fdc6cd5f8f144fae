//! Multi-armed bandits that trade off cumulative reward against the accuracy
//! of the per-arm mean estimates.
//!
//! The crate provides the tradeoff objective over allocations
//! ([`objective`]), an exact solver for the optimal allocation ([`solver`]),
//! running estimators ([`estimation`]), the ForcingBalance policy and its
//! baselines ([`policies`]) and a seeded experiment harness ([`harness`]).
//! Batches of episodes and parameter sweeps run on rayon when the `parallel`
//! feature is enabled (the default) and sequentially otherwise.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod harness;
pub mod objective;
pub mod policies;
pub mod solver;

pub use bandit::{ArmModel, BanditInstance, Family, RngStream};
pub use error::{Error, Result};
pub use estimation::{DeltaSchedule, EmpiricalStats};
pub use exec::Execution;
pub use objective::{Allocation, ConcavityConstants, Moments, TradeoffParams};
pub use policies::{Policy, PolicyKind, PolicyOptions};
pub use solver::{SolveReport, DEFAULT_TOL};
