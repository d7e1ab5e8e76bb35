use super::{GraphSnapshot, PlanError, PlanParams, PlannerKind, PlannerResult, Recorder};
use crate::bandit::{apply_reward, decay_all, pick_arm, restart_arms, ArmPool, RestartOutcome};
use crate::env::{Environment, Scenario};
use crate::forest::{Forest, JoinReport, NodeId, TreeKind};
use crate::rng;

/// Redraws allowed per arm when every placement lands next to a blocked
/// neighbour.
const PLACEMENT_ATTEMPTS: usize = 1000;

pub fn plan_rrdt_star(scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    let params = PlanParams::resolve(scenario, env)?;
    let mut global = rng::stream(params.seed, rng::STREAM_GLOBAL);
    let mut selection = rng::stream(params.seed, rng::STREAM_ARM_SELECTION);
    let (eps, res) = (params.epsilon, params.resolution);

    let mut forest = Forest::new(env.dim());
    let root = forest.insert_root(params.start.clone(), TreeKind::Root, env)?;
    let goal: NodeId = if params.start.distance(&params.goal) == 0.0 {
        root.0
    } else {
        forest.insert_root(params.goal.clone(), TreeKind::DTree, env)?.0
    };

    let mut pool = ArmPool::new(params.bandit, params.walker, params.seed);
    for _ in 0..params.num_arms {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (q, _) = env.sample_free(&mut global)?;
            match forest.join_within_epsilon(&q, eps, env, res)? {
                JoinReport::Joined(j) => {
                    placed = Some((q, j.node));
                    break;
                }
                JoinReport::NoJoin { blocked: 0 } => {
                    let t = forest.insert_root(q.clone(), TreeKind::DTree, env)?;
                    placed = Some((q, t.0));
                    break;
                }
                JoinReport::NoJoin { .. } => {}
            }
        }
        let (q, node) = placed.ok_or_else(|| PlanError::InvalidScenario("could not place arms".into()))?;
        let arm = pool.spawn(q, node);
        pool.arms.push(arm);
    }

    let mut rec = Recorder::default();
    let mut creation_iterations = Vec::new();
    if forest.in_root_tree(goal) {
        rec.offer_solution(forest.cost(goal));
    }

    while rec.nodes() < params.node_budget && rec.iteration() < params.max_iterations {
        rec.next_iteration();
        let report = restart_arms(&mut pool, &mut forest, env, eps, res, &mut global)?;
        rec.in_obstacle(report.rejections);
        let pull = match report.outcome {
            RestartOutcome::NoRestart => true,
            // the draw was neither joined nor kept; the iteration falls through to an arm pull
            RestartOutcome::Blocked { .. } => {
                rec.failed_connection();
                true
            }
            RestartOutcome::Joined { node, joined_root, .. } => {
                if joined_root {
                    forest.rewire(node, env, res, params.rewire_gamma, eps)?;
                }
                rec.node_added();
                rec.check_forest(&forest);
                false
            }
            RestartOutcome::NewTree { .. } => {
                creation_iterations.push(rec.iteration());
                rec.node_added();
                rec.check_forest(&forest);
                false
            }
        };
        if pull {
            let slot = pick_arm(&pool.arms, &mut selection)?;
            let arm = &mut pool.arms[slot];
            let q_new = arm.sampler.propose(eps, &mut arm.rng);
            let success = if !env.point_free(q_new.coords()) {
                rec.in_obstacle(1);
                false
            } else if !env.path_free(arm.sampler.position().coords(), q_new.coords(), res) {
                rec.failed_connection();
                false
            } else {
                match forest.join_within_epsilon(&q_new, eps, env, res)? {
                    JoinReport::Joined(j) => {
                        if j.joined_root {
                            forest.rewire(j.node, env, res, params.rewire_gamma, eps)?;
                        }
                        arm.node = j.node;
                        arm.sampler
                            .report_success(q_new)
                            .map_err(|e| PlanError::InvalidScenario(format!("degenerate walker step: {e}")))?;
                        rec.node_added();
                        rec.check_forest(&forest);
                        true
                    }
                    // the walker's own node is always within reach of a free step
                    JoinReport::NoJoin { .. } => {
                        rec.failed_connection();
                        false
                    }
                }
            };
            if !success {
                arm.sampler.report_failure();
            }
            apply_reward(arm, success, &pool.config);
        }
        decay_all(&mut pool.arms, &pool.config);
        if forest.in_root_tree(goal) {
            rec.offer_solution(forest.cost(goal));
        }
    }

    let stats = rec.stats_mut();
    stats.trees_created = forest.trees_created();
    stats.tree_creation_iterations = creation_iterations;
    stats.restarts = pool.restarts();
    let path = if forest.in_root_tree(goal) {
        Some(forest.extract_path(goal)?)
    } else {
        None
    };
    let mut graph = GraphSnapshot::of_forest(&forest);
    graph.arms = pool.arms.iter().map(|a| a.sampler.position().coords().to_vec()).collect();
    Ok(rec.finish(PlannerKind::Rrdt, &params, path, graph))
}
