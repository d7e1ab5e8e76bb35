use super::{steer, GraphSnapshot, PlanError, PlanParams, PlannerKind, PlannerResult, Recorder};
use crate::env::{Configuration, Environment, Scenario};
use crate::forest::{Forest, NodeId, TreeId, TreeKind};
use crate::rng;

enum Extend {
    Blocked,
    Added(NodeId),
    /// The connect step reached the target across a valid bridge.
    Bridged(NodeId),
}

struct BiTree<'a> {
    forest: Forest,
    env: &'a Environment,
    params: PlanParams,
    rec: Recorder,
}

impl BiTree<'_> {
    fn budget_left(&self) -> bool {
        self.rec.nodes() < self.params.node_budget
    }

    /// One ε-step of `tree` toward `target`.
    fn extend(&mut self, tree: TreeId, target: &Configuration) -> Result<Extend, PlanError> {
        let near = self.forest.nearest_in_tree(target, tree).expect("trees are never empty");
        let q_new = steer(self.forest.config(near), target, self.params.epsilon);
        if !self.env.path_free(self.forest.config(near).coords(), q_new.coords(), self.params.resolution) {
            self.rec.failed_connection();
            return Ok(Extend::Blocked);
        }
        let node = self.forest.attach(q_new, near);
        if self.forest.in_root_tree(node) {
            self.forest
                .rewire(node, self.env, self.params.resolution, self.params.rewire_gamma, self.params.epsilon)?;
        }
        self.rec.node_added();
        self.rec.check_forest(&self.forest);
        Ok(Extend::Added(node))
    }

    /// Greedy connect: step `tree` toward `target` until blocked or within
    /// ε, then bridge to `target` if the final segment is free.
    fn connect(&mut self, tree: TreeId, target: NodeId) -> Result<Extend, PlanError> {
        let goal = self.forest.config(target).clone();
        loop {
            let near = self.forest.nearest_in_tree(&goal, tree).expect("trees are never empty");
            let near_q = self.forest.config(near);
            if near_q.distance(&goal) <= self.params.epsilon {
                if self.env.path_free(near_q.coords(), goal.coords(), self.params.resolution) {
                    return Ok(Extend::Bridged(near));
                }
                self.rec.failed_connection();
                return Ok(Extend::Blocked);
            }
            if !self.budget_left() {
                return Ok(Extend::Blocked);
            }
            match self.extend(tree, &goal)? {
                Extend::Added(_) => continue,
                other => return Ok(other),
            }
        }
    }
}

pub fn plan_birrt_star(scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    let params = PlanParams::resolve(scenario, env)?;
    let mut rng = rng::stream(params.seed, rng::STREAM_GLOBAL);
    let mut forest = Forest::new(env.dim());
    let start_tree = forest.insert_root(params.start.clone(), TreeKind::Root, env)?;
    let mut rec = Recorder::default();
    let mut goal_node = None;
    let mut goal_tree = None;
    if params.start.distance(&params.goal) == 0.0 {
        goal_node = Some(start_tree.0);
        rec.offer_solution(0.0);
    } else {
        let t = forest.insert_root(params.goal.clone(), TreeKind::DTree, env)?;
        goal_tree = Some(t);
        goal_node = goal_node.or(Some(t.0));
    }
    let mut bi = BiTree { forest, env, params, rec };
    let mut grow_start = true;

    while bi.budget_left() && bi.rec.iteration() < bi.params.max_iterations {
        bi.rec.next_iteration();
        let q_rand = crate::env::Configuration::new(env.sample_bounds(&mut rng));
        if !env.point_free(q_rand.coords()) {
            bi.rec.in_obstacle(1);
            continue;
        }
        match goal_tree {
            Some(gt) => {
                let (a, b) = if grow_start { (start_tree, gt) } else { (gt, start_tree) };
                grow_start = !grow_start;
                if let Extend::Added(node) = bi.extend(a, &q_rand)? {
                    if let Extend::Bridged(other) = bi.connect(b, node)? {
                        // `other` is in b, `node` in a
                        bi.forest.merge_trees(b, a, (other, node))?;
                        goal_tree = None;
                    }
                }
            }
            None => {
                bi.extend(start_tree, &q_rand)?;
            }
        }
        if let Some(g) = goal_node {
            if bi.forest.in_root_tree(g) {
                let c = bi.forest.cost(g);
                bi.rec.offer_solution(c);
            }
        }
    }

    let BiTree { forest, params, mut rec, .. } = bi;
    rec.stats_mut().trees_created = forest.trees_created();
    let path = match goal_node {
        Some(g) if forest.in_root_tree(g) => Some(forest.extract_path(g)?),
        _ => None,
    };
    let graph = GraphSnapshot::of_forest(&forest);
    Ok(rec.finish(PlannerKind::BiRrtStar, &params, path, graph))
}
