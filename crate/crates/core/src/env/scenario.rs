//! `key = value` scenario files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::Configuration;
use crate::planners::PlannerKind;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("bad value for `{key}`: {value:?}")]
    BadValue { key: String, value: String },
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One planning problem plus every tunable the planners read.
///
/// `epsilon` and `collision_resolution` default to 2% of the map diagonal
/// and half a cell respectively; they are resolved against the map when a
/// planner validates the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map_path: PathBuf,
    pub start: Configuration,
    pub goal: Configuration,
    pub node_budget: u64,
    pub epsilon: Option<f64>,
    pub eta: f64,
    pub num_arms: usize,
    pub seed: u64,
    pub collision_resolution: Option<f64>,

    pub planner: PlannerKind,
    pub obstacle_threshold: f64,
    pub goal_bias: f64,
    pub decay: f64,
    pub learn_rate: f64,
    pub initial_probability: f64,
    pub base_kappa: f64,
    pub failure_relax: f64,
    pub max_iterations: Option<u64>,
    pub rewire_gamma: Option<f64>,
}

impl Scenario {
    pub fn new(map_path: impl Into<PathBuf>, start: Configuration, goal: Configuration) -> Self {
        Scenario {
            map_path: map_path.into(),
            start,
            goal,
            node_budget: 10_000,
            epsilon: None,
            eta: 0.02,
            num_arms: 4,
            seed: 0,
            collision_resolution: None,
            planner: PlannerKind::Rrdt,
            obstacle_threshold: super::DEFAULT_OBSTACLE_THRESHOLD,
            goal_bias: 0.05,
            decay: 0.999,
            learn_rate: 0.1,
            initial_probability: 0.4,
            base_kappa: 2.0,
            failure_relax: 0.8,
            max_iterations: None,
            rewire_gamma: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut sc = Self::parse(&text)?;
        // relative map paths are resolved against the scenario's directory
        if sc.map_path.is_relative() && !sc.map_path.to_string_lossy().starts_with(super::maps::BUNDLED_PREFIX) {
            if let Some(dir) = path.parent() {
                sc.map_path = dir.join(&sc.map_path);
            }
        }
        Ok(sc)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ScenarioError::Syntax { line: i + 1 })?;
            let k = k.trim().to_string();
            if pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(ScenarioError::Duplicate(k));
            }
            pairs.push((k, v.trim().to_string()));
        }
        let find = |key: &'static str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or(ScenarioError::Missing(key))
        };
        let map_path = find("map_path")?;
        let start = parse_config("start", find("start")?)?;
        let goal = parse_config("goal", find("goal")?)?;
        let mut sc = Scenario::new(map_path, start, goal);
        for (k, v) in &pairs {
            if !matches!(k.as_str(), "map_path" | "start" | "goal") {
                sc.set(k, v)?;
            }
        }
        Ok(sc)
    }

    /// Apply one `key = value` setting (also used for CLI overrides).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let bad = || ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        fn num<T: FromStr>(v: &str, bad: impl Fn() -> ScenarioError) -> Result<T, ScenarioError> {
            v.trim().parse().map_err(|_| bad())
        }
        match key {
            "map_path" => self.map_path = PathBuf::from(value),
            "start" => self.start = parse_config(key, value)?,
            "goal" => self.goal = parse_config(key, value)?,
            "node_budget" => self.node_budget = num(value, bad)?,
            "epsilon" => self.epsilon = Some(num(value, bad)?),
            "eta" => self.eta = num(value, bad)?,
            "num_arms" => self.num_arms = num(value, bad)?,
            "seed" => self.seed = num(value, bad)?,
            "collision_resolution" => self.collision_resolution = Some(num(value, bad)?),
            "planner" => self.planner = value.parse().map_err(|_| bad())?,
            "obstacle_threshold" => self.obstacle_threshold = num(value, bad)?,
            "goal_bias" => self.goal_bias = num(value, bad)?,
            "decay" => self.decay = num(value, bad)?,
            "learn_rate" => self.learn_rate = num(value, bad)?,
            "initial_probability" => self.initial_probability = num(value, bad)?,
            "base_kappa" => self.base_kappa = num(value, bad)?,
            "failure_relax" => self.failure_relax = num(value, bad)?,
            "max_iterations" => self.max_iterations = Some(num(value, bad)?),
            "rewire_gamma" => self.rewire_gamma = Some(num(value, bad)?),
            _ => return Err(ScenarioError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parse and apply a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ScenarioError> {
        let (k, v) = kv.split_once('=').ok_or(ScenarioError::Syntax { line: 0 })?;
        self.set(k.trim(), v.trim())
    }

    pub fn to_text(&self) -> String {
        let join = |c: &Configuration| {
            c.coords().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "map_path = {}", self.map_path.display());
        let _ = writeln!(s, "start = {}", join(&self.start));
        let _ = writeln!(s, "goal = {}", join(&self.goal));
        let _ = writeln!(s, "node_budget = {}", self.node_budget);
        if let Some(e) = self.epsilon {
            let _ = writeln!(s, "epsilon = {e}");
        }
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "num_arms = {}", self.num_arms);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(r) = self.collision_resolution {
            let _ = writeln!(s, "collision_resolution = {r}");
        }
        let _ = writeln!(s, "planner = {}", self.planner);
        let _ = writeln!(s, "obstacle_threshold = {}", self.obstacle_threshold);
        let _ = writeln!(s, "goal_bias = {}", self.goal_bias);
        let _ = writeln!(s, "decay = {}", self.decay);
        let _ = writeln!(s, "learn_rate = {}", self.learn_rate);
        let _ = writeln!(s, "initial_probability = {}", self.initial_probability);
        let _ = writeln!(s, "base_kappa = {}", self.base_kappa);
        let _ = writeln!(s, "failure_relax = {}", self.failure_relax);
        if let Some(m) = self.max_iterations {
            let _ = writeln!(s, "max_iterations = {m}");
        }
        if let Some(g) = self.rewire_gamma {
            let _ = writeln!(s, "rewire_gamma = {g}");
        }
        s
    }
}

fn parse_config(key: &str, value: &str) -> Result<Configuration, ScenarioError> {
    let coords = value
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        })?;
    let q = Configuration::new(coords);
    if q.dim() < 2 || !q.is_finite() {
        return Err(ScenarioError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(q)
}
