//! Sampling-based motion planning with a forest of disjoint trees grown by
//! bandit-scheduled local samplers (RRdT*), plus RRT*, Bi-RRT*,
//! Informed RRT* and PRM* baselines sharing one instrumentation layer.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// per-axis loops index several parallel arrays
#![allow(clippy::needless_range_loop)]

pub mod bandit;
pub mod env;
pub mod forest;
pub mod index;
pub mod local_sampler;
pub mod planners;
pub mod rng;

pub use env::{Configuration, Environment, Scenario};
pub use forest::{Forest, NodeId, Path, TreeId};
pub use planners::{plan, PlannerKind, PlannerResult};
