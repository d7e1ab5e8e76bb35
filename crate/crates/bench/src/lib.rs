//! Experiment harness for the planners in `rrdt_core`: repeated seeded runs,
//! metrics and summary tables, cost traces and SVG snapshots.

pub mod experiment;
pub mod metrics;
pub mod summary;
pub mod svg;

use std::path::Path;

use rrdt_core::env::load_map;
use rrdt_core::planners::{plan, PlanError, PlannerKind, PlannerResult};
use rrdt_core::{Environment, Scenario};
use thiserror::Error;

pub use experiment::{run_experiment, write_outputs, Experiment, ExperimentSpec};
pub use metrics::{MetricsRow, RunStatus};
pub use summary::{summarize, Moments, SummaryRow};
pub use svg::render_svg;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad experiment or scenario file, unloadable map, or no feasible pair.
    #[error("infeasible input: {0}")]
    Infeasible(String),
    #[error("experiment file: {0}")]
    Spec(String),
    #[error("metrics file: {0}")]
    Csv(String),
    #[error("accounting identity violated for {0}")]
    Accounting(String),
    #[error("render: {0}")]
    Render(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl BenchError {
    /// Process exit code: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Infeasible(_) | BenchError::Spec(_) | BenchError::Csv(_) => 2,
            _ => 1,
        }
    }
}

/// Settings for a single `plan` invocation on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct PlanOptions {
    pub planner: Option<PlannerKind>,
    pub seed: Option<u64>,
    pub overrides: Vec<String>,
}

/// Load a scenario and its map, apply options, and run the chosen planner.
pub fn run_scenario(path: &Path, opts: &PlanOptions) -> Result<(Scenario, Environment, PlannerResult), BenchError> {
    let bad = |e: &dyn std::fmt::Display| BenchError::Infeasible(e.to_string());
    let mut sc = Scenario::load(path).map_err(|e| bad(&e))?;
    for kv in &opts.overrides {
        sc.apply_override(kv).map_err(|e| bad(&e))?;
    }
    if let Some(p) = opts.planner {
        sc.planner = p;
    }
    if let Some(s) = opts.seed {
        sc.seed = s;
    }
    let env = load_map(&sc.map_path, sc.obstacle_threshold).map_err(|e| bad(&e))?;
    let result = plan(&sc, &env).map_err(|e| match e {
        PlanError::InvalidScenario(_) => bad(&e),
        other => BenchError::Internal(other.to_string()),
    })?;
    Ok((sc, env, result))
}
