//! Gradient-flow simulation of two-layer networks
//! `f(x) = sum_k a_k sigma(w_k . x)` trained from small initialization, with
//! the diagnostics needed to locate the initial plateau, the initial descent
//! and the secondary plateau of the loss curve.

pub mod activation;
pub mod config;
pub mod dataset;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod fit;
mod kernel;
pub mod milestones;
pub mod model;
pub mod rng;
pub mod state;
pub mod sweep;

pub use activation::Activation;
pub use config::{DataSpec, Integrator, RunConfig};
pub use dataset::{Dataset, Target};
pub use dynamics::{run, Milestone, Record, StopRule, Trajectory};
pub use error::{Error, Result};
pub use milestones::{detect_milestones, MilestoneReport};
pub use state::{init_params, NetworkState};
