//! Evaluation harness for multiple-choice benchmarks under randomized prompt
//! factors.
//!
//! The crate plans factor assignments (one setting for everything, one per
//! experiment, or one per instance per experiment), renders prompts, runs them
//! against a chat-completion endpoint or a seeded synthetic model, and
//! analyses the resulting outcome tensors: variance decomposition,
//! correlation reports, variance-vs-n curves, paired t-tests and observed
//! reversal probabilities between models.

pub mod backend;
pub mod error;
pub mod model;
pub mod orp;
pub mod par;
pub mod planner;
pub mod prompt;
pub mod report;
pub mod rng;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
pub use model::{
    load_dataset, load_factor_space, load_outcomes, save_outcomes, Dataset, Dimension, FactorSetting, FactorSpace,
    FewShotSet, Instance, OutcomeMeta, OutcomeTensor, SettingIds,
};
pub use planner::{AssignmentPlan, PlanMode, PlannerConfig};

/// Version string stamped into every artifact.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[cfg(test)]
pub(crate) mod testutil;
