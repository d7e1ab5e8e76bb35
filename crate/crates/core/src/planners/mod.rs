//! RRdT* and the baseline planners. All of them emit the same per-sample
//! event stream so their sampling efficiency can be compared directly.

mod birrt_star;
mod prm_star;
mod rrdt_star;
mod rrt_star;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bandit::{BanditConfig, BanditError};
use crate::env::{Configuration, EnvError, Environment, Scenario};
use crate::forest::{self, Forest, ForestError, Path};
use crate::local_sampler::WalkerConfig;

pub use birrt_star::plan_birrt_star;
pub use prm_star::{plan_prm_star, Roadmap, PRM_QUERY_INTERVAL};
pub use rrdt_star::plan_rrdt_star;
pub use rrt_star::{plan_informed_rrt_star, plan_rrt_star, InformedSampler};

/// Forest invariants are checked exhaustively this often in debug builds.
const INVARIANT_CHECK_INTERVAL: u64 = 1000;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Rrdt,
    RrtStar,
    BiRrtStar,
    InformedRrtStar,
    PrmStar,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Rrdt,
        PlannerKind::RrtStar,
        PlannerKind::BiRrtStar,
        PlannerKind::InformedRrtStar,
        PlannerKind::PrmStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrdt => "rrdt_star",
            PlannerKind::RrtStar => "rrt_star",
            PlannerKind::BiRrtStar => "birrt_star",
            PlannerKind::InformedRrtStar => "informed_rrt_star",
            PlannerKind::PrmStar => "prm_star",
        }
    }

    /// Whether the planner grows trees incrementally and can fail to connect.
    pub fn is_incremental(self) -> bool {
        self != PlannerKind::PrmStar
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_").replace('*', "_star");
        match key.as_str() {
            "rrdt" | "rrdt_star" => Ok(PlannerKind::Rrdt),
            "rrt_star" | "rrt" | "rrtstar" => Ok(PlannerKind::RrtStar),
            "birrt_star" | "bi_rrt_star" | "birrt" => Ok(PlannerKind::BiRrtStar),
            "informed_rrt_star" | "informed" => Ok(PlannerKind::InformedRrtStar),
            "prm_star" | "prm" => Ok(PlannerKind::PrmStar),
            _ => Err(format!("unknown planner {s:?}")),
        }
    }
}

/// A scenario resolved against its map: every default filled in and every
/// parameter range-checked.
#[derive(Debug, Clone)]
pub struct PlanParams {
    pub start: Configuration,
    pub goal: Configuration,
    pub node_budget: u64,
    pub epsilon: f64,
    pub resolution: f64,
    pub num_arms: usize,
    pub seed: u64,
    pub goal_bias: f64,
    pub bandit: BanditConfig,
    pub walker: WalkerConfig,
    pub max_iterations: u64,
    pub rewire_gamma: f64,
}

impl PlanParams {
    pub fn resolve(scenario: &Scenario, env: &Environment) -> Result<Self, PlanError> {
        let invalid = |m: String| Err(PlanError::InvalidScenario(m));
        for (name, q) in [("start", &scenario.start), ("goal", &scenario.goal)] {
            if q.dim() != env.dim() {
                return invalid(format!("{name} has dimension {}, map has {}", q.dim(), env.dim()));
            }
            if !env.point_free(q.coords()) {
                return invalid(format!("{name} {q:?} is not in free space"));
            }
        }
        let epsilon = scenario.epsilon.unwrap_or(0.02 * env.diagonal());
        let resolution = scenario.collision_resolution.unwrap_or(env.default_resolution());
        if !(resolution > 0.0) {
            return invalid(format!("collision_resolution {resolution} must be positive"));
        }
        if !(epsilon > resolution) || !epsilon.is_finite() {
            return invalid(format!("epsilon {epsilon} must exceed collision_resolution {resolution}"));
        }
        if scenario.num_arms == 0 {
            return invalid("num_arms must be positive".into());
        }
        if !(0.0..1.0).contains(&scenario.goal_bias) {
            return invalid(format!("goal_bias {} not in [0, 1)", scenario.goal_bias));
        }
        if !(scenario.base_kappa >= 0.0 && scenario.base_kappa.is_finite()) {
            return invalid(format!("base_kappa {} must be non-negative", scenario.base_kappa));
        }
        if !(scenario.failure_relax > 0.0 && scenario.failure_relax <= 1.0) {
            return invalid(format!("failure_relax {} not in (0, 1]", scenario.failure_relax));
        }
        let bandit = BanditConfig {
            eta: scenario.eta,
            decay: scenario.decay,
            learn_rate: scenario.learn_rate,
            initial_probability: scenario.initial_probability,
        };
        bandit.validate()?;
        Ok(PlanParams {
            start: scenario.start.clone(),
            goal: scenario.goal.clone(),
            node_budget: scenario.node_budget,
            epsilon,
            resolution,
            num_arms: scenario.num_arms,
            seed: scenario.seed,
            goal_bias: scenario.goal_bias,
            bandit,
            walker: WalkerConfig {
                base_kappa: scenario.base_kappa,
                failure_relax: scenario.failure_relax,
            },
            max_iterations: scenario
                .max_iterations
                .unwrap_or_else(|| scenario.node_budget.saturating_mul(100).max(1)),
            rewire_gamma: scenario.rewire_gamma.unwrap_or_else(|| forest::default_rewire_gamma(env)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    NodeAdded,
    FailedConnection,
    SampleInObstacle,
    SolutionImproved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerEvent {
    pub iteration: u64,
    pub kind: EventKind,
    pub best_cost: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub iterations: u64,
    pub nodes_added: u64,
    pub failed_connections: u64,
    pub samples_in_obstacle: u64,
    /// Nodes added when the first solution appeared.
    pub first_solution_node: Option<u64>,
    pub best_cost: Option<f64>,
    /// The iteration cap stopped the run before the node budget was filled.
    pub capped: bool,
    pub trees_created: u64,
    /// Iterations at which new trees were founded (RRdT* only).
    pub tree_creation_iterations: Vec<u64>,
    pub restarts: u64,
}

impl RunStats {
    pub fn total_sampled(&self) -> u64 {
        self.nodes_added + self.failed_connections + self.samples_in_obstacle
    }
}

/// Nodes, edges and arm positions for rendering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphSnapshot {
    pub nodes: Vec<Vec<f64>>,
    /// Canonical tree (or component) id per node.
    pub tree: Vec<u32>,
    /// `(child, parent)` pairs for trees; vertex pairs for roadmaps.
    pub edges: Vec<(u32, u32)>,
    pub arms: Vec<Vec<f64>>,
}

impl GraphSnapshot {
    pub fn of_forest(forest: &Forest) -> Self {
        GraphSnapshot {
            nodes: forest.node_ids().map(|n| forest.config(n).coords().to_vec()).collect(),
            tree: forest.node_ids().map(|n| forest.tree_of(n).0 .0).collect(),
            edges: forest.edges().map(|(c, p)| (c.0, p.0)).collect(),
            arms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlannerResult {
    pub planner: PlannerKind,
    pub path: Option<Path>,
    pub events: Vec<PlannerEvent>,
    pub rng_seed: u64,
    pub stats: RunStats,
    pub graph: GraphSnapshot,
}

/// Run the planner named by the scenario.
pub fn plan(scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    plan_with(scenario.planner, scenario, env)
}

pub fn plan_with(kind: PlannerKind, scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    match kind {
        PlannerKind::Rrdt => plan_rrdt_star(scenario, env),
        PlannerKind::RrtStar => plan_rrt_star(scenario, env),
        PlannerKind::BiRrtStar => plan_birrt_star(scenario, env),
        PlannerKind::InformedRrtStar => plan_informed_rrt_star(scenario, env),
        PlannerKind::PrmStar => plan_prm_star(scenario, env),
    }
}

/// Move from `from` toward `to` by at most `epsilon`; returns `to` itself
/// when it is within reach.
pub fn steer(from: &Configuration, to: &Configuration, epsilon: f64) -> Configuration {
    let d = from.distance(to);
    if d <= epsilon {
        return to.clone();
    }
    let t = epsilon / d;
    Configuration::new(
        from.coords()
            .iter()
            .zip(to.coords())
            .map(|(a, b)| a + t * (b - a))
            .collect(),
    )
}

/// Event log and counters shared by every planner.
#[derive(Debug, Default)]
pub(crate) struct Recorder {
    events: Vec<PlannerEvent>,
    stats: RunStats,
    iteration: u64,
}

impl Recorder {
    pub(crate) fn next_iteration(&mut self) {
        self.iteration += 1;
        self.stats.iterations = self.iteration;
    }

    pub(crate) fn iteration(&self) -> u64 {
        self.iteration
    }

    pub(crate) fn nodes(&self) -> u64 {
        self.stats.nodes_added
    }

    fn push(&mut self, kind: EventKind) {
        self.events.push(PlannerEvent {
            iteration: self.iteration,
            kind,
            best_cost: self.stats.best_cost,
        });
    }

    pub(crate) fn node_added(&mut self) {
        self.stats.nodes_added += 1;
        self.push(EventKind::NodeAdded);
    }

    pub(crate) fn failed_connection(&mut self) {
        self.stats.failed_connections += 1;
        self.push(EventKind::FailedConnection);
    }

    pub(crate) fn in_obstacle(&mut self, count: u64) {
        for _ in 0..count {
            self.stats.samples_in_obstacle += 1;
            self.push(EventKind::SampleInObstacle);
        }
    }

    /// Log a solution improvement if `cost` beats the best so far.
    pub(crate) fn offer_solution(&mut self, cost: f64) {
        if !cost.is_finite() {
            return;
        }
        let better = match self.stats.best_cost {
            Some(b) => cost < b - 1e-12,
            None => true,
        };
        if better {
            if self.stats.first_solution_node.is_none() {
                self.stats.first_solution_node = Some(self.stats.nodes_added);
            }
            self.stats.best_cost = Some(cost);
            self.push(EventKind::SolutionImproved);
        }
    }

    pub(crate) fn check_forest(&self, forest: &Forest) {
        if cfg!(debug_assertions) && self.stats.nodes_added.is_multiple_of(INVARIANT_CHECK_INTERVAL) {
            if let Err(e) = forest.check_invariants() {
                panic!("forest invariant violated after {} nodes: {e}", self.stats.nodes_added);
            }
        }
    }

    pub(crate) fn finish(
        mut self,
        planner: PlannerKind,
        params: &PlanParams,
        path: Option<Path>,
        graph: GraphSnapshot,
    ) -> PlannerResult {
        self.stats.capped = self.stats.nodes_added < params.node_budget;
        PlannerResult {
            planner,
            path,
            events: self.events,
            rng_seed: params.seed,
            stats: self.stats,
            graph,
        }
    }

    pub(crate) fn stats_mut(&mut self) -> &mut RunStats {
        &mut self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planner_names_round_trip() {
        for k in PlannerKind::ALL {
            assert_eq!(k.name().parse::<PlannerKind>().unwrap(), k);
        }
        assert_eq!("RRdT*".parse::<PlannerKind>().unwrap(), PlannerKind::Rrdt);
        assert_eq!("Bi-RRT*".parse::<PlannerKind>().unwrap(), PlannerKind::BiRrtStar);
        assert!("lm_rrt".parse::<PlannerKind>().is_err());
    }

    #[test]
    fn resolve_defaults_and_errors() {
        let env = Environment::empty(&[100, 100]);
        let sc = Scenario::new("x", Configuration::from([1.0, 1.0]), Configuration::from([90.0, 90.0]));
        let p = PlanParams::resolve(&sc, &env).unwrap();
        assert!((p.epsilon - 0.02 * 200f64.sqrt() * 100.0 / 10.0).abs() < 1e-9);
        assert_eq!(p.resolution, 0.5);
        assert_eq!(p.max_iterations, 1_000_000);

        let mut bad = sc.clone();
        bad.epsilon = Some(0.4);
        assert!(PlanParams::resolve(&bad, &env).is_err());
        let mut bad = sc.clone();
        bad.goal = Configuration::from([100.0, 5.0]);
        assert!(PlanParams::resolve(&bad, &env).is_err());
        let mut bad = sc;
        bad.eta = 0.5;
        assert!(PlanParams::resolve(&bad, &env).is_err());
    }
}
