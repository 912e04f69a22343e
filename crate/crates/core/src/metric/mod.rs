//! Learners on the continuous ball environment: a fixed epsilon-net agent and
//! adaptive-partition agents.

mod adaptive;
mod cover;
mod net_staged;
mod params;
mod partition;

pub use adaptive::{AdaptiveAgent, AdaptiveRule};
pub use cover::{Cover, DiscreteCover, EpsNet};
pub use net_staged::NetStagedRandQL;
pub use params::{adaptive_prior_count, net_prior_count, theory_cj_metric, MetricHyperParams, PriorCountRule, D_MAX};
pub use partition::{BallRef, Node, Partition, SplitRecord};
