//! Experiment files and the planner × pair × repetition runner.
//!
//! ```text
//! map_path = bundled:maze
//! planners = rrdt_star, rrt_star, prm_star
//! pair = 16.5, 16.5 -> 379.5, 379.5     # repeatable
//! pair_count = 20                        # or auto-generate
//! repetitions = 20
//! node_budget = 10000
//! base_seed = 7
//! out_dir = results/maze
//! renders = first                        # none | first | all
//! epsilon = 8                            # any other key overrides the scenario
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rrdt_core::env::{load_map, maps, DEFAULT_OBSTACLE_THRESHOLD};
use rrdt_core::planners::{plan_with, PlannerKind};
use rrdt_core::rng;
use rrdt_core::{Configuration, Environment, Scenario};

use crate::metrics::{trace, write_metrics, write_trace, MetricsRow};
use crate::summary::{summarize, write_summary};
use crate::svg::render_svg;
use crate::BenchError;

/// Auto-generated pairs must be at least this fraction of the map diagonal apart.
pub const MIN_PAIR_SEPARATION: f64 = 0.5;
const PAIR_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Renders {
    None,
    /// Pair 0, repetition 0 of each planner.
    First,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pairs {
    Listed(Vec<(Configuration, Configuration)>),
    Generate(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub map_path: PathBuf,
    pub planners: Vec<PlannerKind>,
    pub pairs: Pairs,
    pub repetitions: usize,
    pub node_budget: u64,
    pub base_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub renders: Renders,
    /// Scenario settings applied to every run, in file order.
    pub overrides: Vec<(String, String)>,
}

fn spec_err(msg: impl Into<String>) -> BenchError {
    BenchError::Spec(msg.into())
}

fn parse_point(s: &str) -> Result<Configuration, BenchError> {
    let coords = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| spec_err(format!("bad configuration {s:?}")))?;
    Ok(Configuration::new(coords))
}

impl ExperimentSpec {
    pub fn new(map_path: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            map_path: map_path.into(),
            planners: PlannerKind::ALL.to_vec(),
            pairs: Pairs::Listed(Vec::new()),
            repetitions: 20,
            node_budget: 10_000,
            base_seed: 0,
            out_dir: None,
            renders: Renders::First,
            overrides: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.display().to_string(), e))?;
        let mut spec = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let bundled = spec.map_path.to_string_lossy().starts_with(maps::BUNDLED_PREFIX);
        if spec.map_path.is_relative() && !bundled {
            spec.map_path = dir.join(&spec.map_path);
        }
        if let Some(out) = spec.out_dir.as_mut().filter(|o| o.is_relative()) {
            *out = dir.join(&*out);
        }
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut spec: Option<ExperimentSpec> = None;
        let mut pending: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| spec_err(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k == "map_path" {
                if spec.is_some() {
                    return Err(spec_err("duplicate key `map_path`"));
                }
                spec = Some(ExperimentSpec::new(v));
            } else {
                pending.push((i + 1, k, v));
            }
        }
        let mut spec = spec.ok_or_else(|| spec_err("missing required key `map_path`"))?;
        let mut seen = HashSet::new();
        let mut listed = Vec::new();
        let mut count = None;
        for (line, k, v) in pending {
            if k != "pair" && !seen.insert(k.clone()) {
                return Err(spec_err(format!("duplicate key `{k}`")));
            }
            let bad = || spec_err(format!("line {line}: bad value for `{k}`: {v:?}"));
            match k.as_str() {
                "planners" => {
                    spec.planners = v
                        .split(',')
                        .map(|p| p.trim().parse::<PlannerKind>().map_err(|_| bad()))
                        .collect::<Result<_, _>>()?;
                }
                "pair" => {
                    let (s, g) = v.split_once("->").ok_or_else(bad)?;
                    listed.push((parse_point(s)?, parse_point(g)?));
                }
                "pair_count" => count = Some(v.parse().map_err(|_| bad())?),
                "repetitions" => spec.repetitions = v.parse().map_err(|_| bad())?,
                "node_budget" => spec.node_budget = v.parse().map_err(|_| bad())?,
                "base_seed" => spec.base_seed = v.parse().map_err(|_| bad())?,
                "out_dir" => spec.out_dir = Some(PathBuf::from(v)),
                "renders" => {
                    spec.renders = match v.as_str() {
                        "none" => Renders::None,
                        "first" => Renders::First,
                        "all" => Renders::All,
                        _ => return Err(bad()),
                    }
                }
                "map_path" | "start" | "goal" | "seed" | "planner" => {
                    return Err(spec_err(format!("line {line}: `{k}` is set per run by the harness")));
                }
                _ => {
                    // validate against a throwaway scenario now, not mid-experiment
                    let mut probe = Scenario::new("probe", Configuration::from([0.0, 0.0]), Configuration::from([0.0, 0.0]));
                    probe.set(&k, &v).map_err(|e| spec_err(format!("line {line}: {e}")))?;
                    spec.overrides.push((k, v));
                }
            }
        }
        spec.pairs = match (listed.is_empty(), count) {
            (false, None) => Pairs::Listed(listed),
            (true, Some(n)) => Pairs::Generate(n),
            (true, None) => Pairs::Listed(Vec::new()),
            (false, Some(_)) => return Err(spec_err("use either `pair` lines or `pair_count`, not both")),
        };
        if spec.planners.is_empty() {
            return Err(spec_err("empty planner list"));
        }
        Ok(spec)
    }

    /// Short map label for tables: the bundled name or the file stem.
    pub fn map_label(&self) -> String {
        let s = self.map_path.to_string_lossy();
        let label = match s.strip_prefix(maps::BUNDLED_PREFIX) {
            Some(name) => name.to_string(),
            None => self
                .map_path
                .file_stem()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_else(|| s.into_owned()),
        };
        label.replace([',', '\n', '\r'], "_")
    }

    pub fn obstacle_threshold(&self) -> f64 {
        self.overrides
            .iter()
            .rev()
            .find(|(k, _)| k == "obstacle_threshold")
            .and_then(|(_, v)| v.parse().ok())
            .unwrap_or(DEFAULT_OBSTACLE_THRESHOLD)
    }

    pub fn load_map(&self) -> Result<Environment, BenchError> {
        load_map(&self.map_path, self.obstacle_threshold()).map_err(|e| BenchError::Infeasible(e.to_string()))
    }

    /// Seed for one run, derived from every coordinate of the run.
    pub fn run_seed(&self, planner: PlannerKind, pair: usize, repetition: usize) -> u64 {
        rng::combine(&[self.base_seed, rng::hash_str(planner.name()), pair as u64, repetition as u64])
    }

    pub fn scenario(&self, planner: PlannerKind, pair: &(Configuration, Configuration), seed: u64) -> Scenario {
        let mut sc = Scenario::new(self.map_path.clone(), pair.0.clone(), pair.1.clone());
        for (k, v) in &self.overrides {
            sc.set(k, v).expect("validated while parsing");
        }
        sc.planner = planner;
        sc.node_budget = self.node_budget;
        sc.seed = seed;
        sc
    }
}

/// A pair is usable when both ends are free and the grid connects them.
pub fn pair_feasible(env: &Environment, start: &Configuration, goal: &Configuration) -> bool {
    start.dim() == env.dim()
        && goal.dim() == env.dim()
        && env.point_free(start.coords())
        && env.point_free(goal.coords())
        && env.grid_connected(start.coords(), goal.coords())
}

/// Free, mutually reachable pairs at least half the diagonal apart.
pub fn generate_pairs(env: &Environment, count: usize, seed: u64) -> Result<Vec<(Configuration, Configuration)>, BenchError> {
    let mut r = rng::stream(rng::combine(&[seed, rng::hash_str("pairs")]), rng::STREAM_GLOBAL);
    let min_sep = MIN_PAIR_SEPARATION * env.diagonal();
    let mut pairs = Vec::with_capacity(count);
    let mut attempts = 0;
    while pairs.len() < count {
        attempts += 1;
        if attempts > PAIR_ATTEMPTS {
            return Err(BenchError::Infeasible(format!(
                "found only {} of {count} feasible pairs",
                pairs.len()
            )));
        }
        let (s, _) = env.sample_free(&mut r).map_err(|e| BenchError::Infeasible(e.to_string()))?;
        let (g, _) = env.sample_free(&mut r).map_err(|e| BenchError::Infeasible(e.to_string()))?;
        if s.distance(&g) >= min_sep && env.grid_connected(s.coords(), g.coords()) {
            pairs.push((s, g));
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub id: String,
    pub row: MetricsRow,
    pub trace: Vec<(u64, Option<f64>)>,
    pub svg: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub map: String,
    pub pairs: Vec<(Configuration, Configuration)>,
    /// Pairs dropped before running, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// Ordered by planner, then pair, then repetition.
    pub runs: Vec<RunRecord>,
}

impl Experiment {
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.runs.iter().map(|r| r.row.clone()).collect()
    }
}

pub fn run_id(planner: PlannerKind, map: &str, pair: usize, repetition: usize) -> String {
    format!("{}-{map}-p{pair:03}-r{repetition:03}", planner.name())
}

/// Execute every planner × pair × repetition on `jobs` worker threads.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<Experiment, BenchError> {
    let env = spec.load_map()?;
    let map = spec.map_label();
    let candidates = match &spec.pairs {
        Pairs::Listed(p) if !p.is_empty() => p.clone(),
        Pairs::Listed(_) => {
            let name = spec.map_path.to_string_lossy();
            let (s, g) = name
                .strip_prefix(maps::BUNDLED_PREFIX)
                .and_then(maps::canonical_pair)
                .ok_or_else(|| spec_err("no `pair` lines or `pair_count` given"))?;
            vec![(Configuration::from(s), Configuration::from(g))]
        }
        Pairs::Generate(n) => generate_pairs(&env, *n, spec.base_seed)?,
    };
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (i, p) in candidates.into_iter().enumerate() {
        if pair_feasible(&env, &p.0, &p.1) {
            pairs.push((i, p));
        } else {
            skipped.push((i, format!("{:?} -> {:?} is not connected in free space", p.0.coords(), p.1.coords())));
        }
    }
    if pairs.is_empty() {
        return Err(BenchError::Infeasible("no feasible start/goal pair".into()));
    }

    let mut jobs_list = Vec::new();
    let mut seeds = HashSet::new();
    for &planner in &spec.planners {
        for (pair_idx, pair) in &pairs {
            for rep in 0..spec.repetitions {
                let seed = spec.run_seed(planner, *pair_idx, rep);
                if !seeds.insert(seed) {
                    return Err(BenchError::Internal(format!("seed collision at {planner} pair {pair_idx} rep {rep}")));
                }
                jobs_list.push((planner, *pair_idx, pair, rep, seed));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Internal(e.to_string()))?;
    // indexed collect keeps the job order whatever the completion order
    let runs: Vec<RunRecord> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|&(planner, pair_idx, pair, rep, seed)| {
                let render = match spec.renders {
                    Renders::None => false,
                    Renders::First => pair_idx == pairs[0].0 && rep == 0,
                    Renders::All => true,
                };
                run_one(spec, &env, &map, planner, pair_idx, pair, rep, seed, render)
            })
            .collect()
    });
    Ok(Experiment {
        map,
        pairs: pairs.into_iter().map(|(_, p)| p).collect(),
        skipped,
        runs,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    spec: &ExperimentSpec,
    env: &Environment,
    map: &str,
    planner: PlannerKind,
    pair_idx: usize,
    pair: &(Configuration, Configuration),
    rep: usize,
    seed: u64,
    render: bool,
) -> RunRecord {
    let id = run_id(planner, map, pair_idx, rep);
    let sc = spec.scenario(planner, pair, seed);
    match plan_with(planner, &sc, env) {
        Ok(result) => RunRecord {
            row: MetricsRow::from_result(map, pair_idx, rep, &result),
            trace: trace(&result),
            svg: if render && env.dim() == 2 {
                render_svg(env, &result.graph, result.path.as_ref(), &result.graph.arms).ok()
            } else {
                None
            },
            error: None,
            id,
        },
        Err(e) => RunRecord {
            row: MetricsRow::failed(planner, map, pair_idx, rep, seed),
            trace: Vec::new(),
            svg: None,
            error: Some(e.to_string()),
            id,
        },
    }
}

/// Write `metrics.csv`, `summary.csv`, `traces/` and `renders/` under `dir`.
pub fn write_outputs(dir: &Path, exp: &Experiment) -> Result<(), BenchError> {
    let io = |p: &Path, e| BenchError::Io(p.display().to_string(), e);
    let traces = dir.join("traces");
    let renders = dir.join("renders");
    std::fs::create_dir_all(&traces).map_err(|e| io(&traces, e))?;
    let rows = exp.rows();
    let metrics = write_metrics(&rows)?;
    let summary = write_summary(&summarize(&rows)?);
    for (name, body) in [("metrics.csv", &metrics), ("summary.csv", &summary)] {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io(&p, e))?;
    }
    for run in &exp.runs {
        let p = traces.join(format!("{}.csv", run.id));
        std::fs::write(&p, write_trace(&run.trace)).map_err(|e| io(&p, e))?;
        if let Some(svg) = &run.svg {
            std::fs::create_dir_all(&renders).map_err(|e| io(&renders, e))?;
            let p = renders.join(format!("{}.svg", run.id));
            std::fs::write(&p, svg).map_err(|e| io(&p, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
map_path = bundled:maze
planners = rrdt, RRT*, prm
pair = 16.5, 16.5 -> 379.5, 379.5
pair = 16.5, 379.5 -> 379.5, 16.5   # second
repetitions = 3
node_budget = 500
base_seed = 9
epsilon = 8
num_arms = 100
";

    #[test]
    fn parses_experiment_files() {
        let spec = ExperimentSpec::parse(TEXT).unwrap();
        assert_eq!(spec.planners, vec![PlannerKind::Rrdt, PlannerKind::RrtStar, PlannerKind::PrmStar]);
        match &spec.pairs {
            Pairs::Listed(p) => assert_eq!(p.len(), 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(spec.repetitions, 3);
        assert_eq!(spec.overrides.len(), 2);
        assert_eq!(spec.map_label(), "maze");
        let sc = spec.scenario(PlannerKind::Rrdt, &(Configuration::from([1.0, 1.0]), Configuration::from([2.0, 2.0])), 5);
        assert_eq!((sc.epsilon, sc.num_arms, sc.node_budget, sc.seed), (Some(8.0), 100, 500, 5));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ExperimentSpec::parse("planners = rrt").is_err());
        assert!(ExperimentSpec::parse(&format!("{TEXT}bogus = 1\n")).is_err());
        assert!(ExperimentSpec::parse(&format!("{TEXT}repetitions = 4\n")).is_err());
        assert!(ExperimentSpec::parse(&format!("{TEXT}pair_count = 4\n")).is_err());
        assert!(ExperimentSpec::parse(&format!("{TEXT}seed = 4\n")).is_err());
        assert!(ExperimentSpec::parse("map_path = x\nplanners = lm_rrt\n").is_err());
    }

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let spec = ExperimentSpec::parse(TEXT).unwrap();
        let mut seen = HashSet::new();
        for p in PlannerKind::ALL {
            for pair in 0..20 {
                for rep in 0..20 {
                    assert!(seen.insert(spec.run_seed(p, pair, rep)));
                }
            }
        }
    }

    #[test]
    fn generated_pairs_are_far_and_connected() {
        let env = maps::bundled("clutter").unwrap();
        let pairs = generate_pairs(&env, 5, 3).unwrap();
        assert_eq!(pairs.len(), 5);
        for (s, g) in &pairs {
            assert!(s.distance(g) >= 0.5 * env.diagonal());
            assert!(pair_feasible(&env, s, g));
        }
        assert_eq!(pairs, generate_pairs(&env, 5, 3).unwrap());
    }
}
