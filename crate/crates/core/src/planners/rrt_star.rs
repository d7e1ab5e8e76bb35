use rand::Rng;
use rand_distr::StandardNormal;

use super::{steer, GraphSnapshot, PlanError, PlanParams, PlannerKind, PlannerResult, Recorder};
use crate::env::{Configuration, Environment, Scenario};
use crate::forest::{Forest, NodeId, TreeKind};
use crate::rng::{self, PlannerRng};

/// In-bounds redraw attempts before falling back to the bounding box.
const ELLIPSE_ATTEMPTS: usize = 10_000;

pub fn plan_rrt_star(scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    run(PlannerKind::RrtStar, scenario, env)
}

pub fn plan_informed_rrt_star(scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    run(PlannerKind::InformedRrtStar, scenario, env)
}

/// Direct sampling of the prolate hyperspheroid with foci at start and goal.
#[derive(Debug, Clone)]
pub struct InformedSampler {
    center: Vec<f64>,
    c_min: f64,
    /// Orthonormal frame; the first axis points from start to goal.
    frame: Vec<Vec<f64>>,
}

impl InformedSampler {
    pub fn new(start: &Configuration, goal: &Configuration) -> Self {
        let d = start.dim();
        let center: Vec<f64> = start.coords().iter().zip(goal.coords()).map(|(a, b)| 0.5 * (a + b)).collect();
        let c_min = start.distance(goal);
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(d);
        if c_min > 0.0 {
            frame.push(goal.coords().iter().zip(start.coords()).map(|(g, s)| (g - s) / c_min).collect());
        }
        // Gram-Schmidt over the standard basis fills the remaining axes.
        for k in 0..d {
            if frame.len() == d {
                break;
            }
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            for f in &frame {
                let dot: f64 = v.iter().zip(f).map(|(a, b)| a * b).sum();
                for (vi, fi) in v.iter_mut().zip(f) {
                    *vi -= dot * fi;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                frame.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        InformedSampler { center, c_min, frame }
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    /// Uniform sample from `{x : |x − start| + |x − goal| ≤ c_best}`.
    pub fn sample_ellipsoid<R: Rng + ?Sized>(&self, c_best: f64, rng: &mut R) -> Vec<f64> {
        let d = self.center.len();
        let c_best = c_best.max(self.c_min);
        let mut ball: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = ball.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = rng.random::<f64>().powf(1.0 / d as f64);
        let scale = if norm > 0.0 { radius / norm } else { 0.0 };
        let minor = 0.5 * (c_best * c_best - self.c_min * self.c_min).max(0.0).sqrt();
        for (i, b) in ball.iter_mut().enumerate() {
            *b *= scale * if i == 0 { 0.5 * c_best } else { minor };
        }
        let mut x = self.center.clone();
        for (axis, b) in self.frame.iter().zip(&ball) {
            for (xi, ai) in x.iter_mut().zip(axis) {
                *xi += b * ai;
            }
        }
        x
    }

    /// Ellipsoid sample redrawn until it lies inside the map bounds.
    pub fn sample<R: Rng + ?Sized>(&self, c_best: f64, env: &Environment, rng: &mut R) -> Vec<f64> {
        for _ in 0..ELLIPSE_ATTEMPTS {
            let x = self.sample_ellipsoid(c_best, rng);
            if env.in_bounds(&x) {
                return x;
            }
        }
        env.sample_bounds(rng)
    }
}

/// Goal-biased or uniform draw, restricted to the informed set once a
/// solution exists.
fn draw(
    params: &PlanParams,
    informed: Option<&InformedSampler>,
    best: Option<f64>,
    goal_in_tree: bool,
    env: &Environment,
    rng: &mut PlannerRng,
) -> Configuration {
    if !goal_in_tree && rng.random::<f64>() < params.goal_bias {
        return params.goal.clone();
    }
    match (informed, best) {
        (Some(s), Some(c)) => Configuration::new(s.sample(c, env, rng)),
        _ => Configuration::new(env.sample_bounds(rng)),
    }
}

fn run(kind: PlannerKind, scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    let params = PlanParams::resolve(scenario, env)?;
    let mut rng = rng::stream(params.seed, rng::STREAM_GLOBAL);
    let mut forest = Forest::new(env.dim());
    let root = forest.insert_root(params.start.clone(), TreeKind::Root, env)?;
    let informed = (kind == PlannerKind::InformedRrtStar).then(|| InformedSampler::new(&params.start, &params.goal));
    let mut rec = Recorder::default();
    let mut goal_node: Option<NodeId> = (params.start.distance(&params.goal) == 0.0).then_some(root.0);
    if let Some(g) = goal_node {
        rec.offer_solution(forest.cost(g));
    }

    while rec.nodes() < params.node_budget && rec.iteration() < params.max_iterations {
        rec.next_iteration();
        let best = goal_node.map(|g| forest.cost(g));
        let q_rand = draw(&params, informed.as_ref(), best, goal_node.is_some(), env, &mut rng);
        if !env.point_free(q_rand.coords()) {
            rec.in_obstacle(1);
            continue;
        }
        let nearest = forest.nearest(&q_rand)?;
        let q_new = steer(forest.config(nearest), &q_rand, params.epsilon);
        if !env.path_free(forest.config(nearest).coords(), q_new.coords(), params.resolution) {
            rec.failed_connection();
            continue;
        }
        let reached_goal = goal_node.is_none() && q_new == params.goal;
        let node = forest.attach(q_new, nearest);
        forest.rewire(node, env, params.resolution, params.rewire_gamma, params.epsilon)?;
        rec.node_added();
        rec.check_forest(&forest);
        if reached_goal {
            goal_node = Some(node);
        }
        if let Some(g) = goal_node {
            rec.offer_solution(forest.cost(g));
        }
    }

    rec.stats_mut().trees_created = forest.trees_created();
    let path = goal_node.map(|g| forest.extract_path(g)).transpose()?;
    let graph = GraphSnapshot::of_forest(&forest);
    Ok(rec.finish(kind, &params, path, graph))
}
