//! Randomized Q-learning for episodic MDPs.
//!
//! Learning-rate randomized agents (RandQL, SampledRandQL, StagedRandQL and
//! their metric-space counterparts), bonus- and posterior-based baselines,
//! exact tabular oracles, the benchmark environments, and a deterministic
//! multi-seed experiment harness.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod envs;
pub mod error;
pub mod harness;
pub mod metric;
pub mod oracle;
pub mod policy;
pub mod samplers;
pub mod selftest;
pub mod stats;

pub use error::{Error, Result};
pub use samplers::{BetaParams, Rng};
