//! Mortal, non-stationary bandit over local samplers.
//!
//! Each arm keeps an exponentially weighted estimate of its Bernoulli
//! success probability, every arm decays geometrically each iteration, and
//! arms whose probability drops below η are restarted at a uniformly drawn
//! free configuration.

use rand::Rng;
use thiserror::Error;

use crate::env::{Configuration, EnvError, Environment};
use crate::forest::{Forest, ForestError, JoinReport, NodeId, TreeId, TreeKind};
use crate::local_sampler::{LocalSampler, WalkerConfig};
use crate::rng::{self, PlannerRng};

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("every arm has zero probability")]
    AllZero,
    #[error("invalid bandit configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditConfig {
    /// Restart threshold η.
    pub eta: f64,
    /// Per-iteration multiplicative decay δ.
    pub decay: f64,
    /// EMA weight λ of the newest reward.
    pub learn_rate: f64,
    /// Probability p₀ given to fresh and restarted arms.
    pub initial_probability: f64,
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig {
            eta: 0.02,
            decay: 0.999,
            learn_rate: 0.1,
            initial_probability: 0.4,
        }
    }
}

impl BanditConfig {
    pub fn validate(&self) -> Result<(), BanditError> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.eta) {
            return Err(BanditError::Config(format!("eta {} not in (0, 1)", self.eta)));
        }
        if !open(self.decay) {
            return Err(BanditError::Config(format!("decay {} not in (0, 1)", self.decay)));
        }
        if !open(self.learn_rate) {
            return Err(BanditError::Config(format!("learn_rate {} not in (0, 1)", self.learn_rate)));
        }
        if !(self.initial_probability > self.eta && self.initial_probability <= 1.0) {
            return Err(BanditError::Config(format!(
                "initial_probability {} not in (eta, 1]",
                self.initial_probability
            )));
        }
        Ok(())
    }

    /// Iterations of pure decay before an arm at `p` falls below η.
    pub fn iterations_to_expire(&self, p: f64) -> u64 {
        ((self.eta / p).ln() / self.decay.ln()).ceil().max(0.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArmId(pub u64);

#[derive(Debug, Clone)]
pub struct Arm {
    pub id: ArmId,
    pub sampler: LocalSampler,
    pub probability: f64,
    pub pulls: u64,
    /// Forest node at the walker's position.
    pub node: NodeId,
    /// This arm's private walker stream.
    pub rng: PlannerRng,
}

impl Arm {
    /// The tree the arm is currently exploring.
    pub fn home_tree(&self, forest: &Forest) -> TreeId {
        forest.tree_of(self.node)
    }
}

/// Multinomial draw proportional to arm probabilities.
pub fn pick_arm<R: Rng + ?Sized>(arms: &[Arm], rng: &mut R) -> Result<usize, BanditError> {
    let total: f64 = arms.iter().map(|a| a.probability).sum();
    if !(total > 0.0) {
        return Err(BanditError::AllZero);
    }
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (i, arm) in arms.iter().enumerate() {
        if arm.probability <= 0.0 {
            continue;
        }
        last_positive = i;
        if u < arm.probability {
            return Ok(i);
        }
        u -= arm.probability;
    }
    Ok(last_positive)
}

pub fn apply_reward(arm: &mut Arm, reward: bool, config: &BanditConfig) {
    let r = if reward { 1.0 } else { 0.0 };
    arm.probability = ((1.0 - config.learn_rate) * arm.probability + config.learn_rate * r).clamp(0.0, 1.0);
    arm.pulls += 1;
}

pub fn decay_all(arms: &mut [Arm], config: &BanditConfig) {
    for arm in arms {
        arm.probability *= config.decay;
    }
}

/// The live arm set plus the bookkeeping needed to mint new arms.
#[derive(Debug, Clone)]
pub struct ArmPool {
    pub arms: Vec<Arm>,
    pub config: BanditConfig,
    pub walker: WalkerConfig,
    seed: u64,
    next_id: u64,
    /// Restarts that founded a new d-tree.
    pub restarts_new_tree: u64,
    /// Restarts whose draw joined an existing tree.
    pub restarts_relocated: u64,
    /// Restart draws rejected because their only neighbours were blocked.
    pub restarts_blocked: u64,
}

impl ArmPool {
    pub fn new(config: BanditConfig, walker: WalkerConfig, seed: u64) -> Self {
        ArmPool {
            arms: Vec::new(),
            config,
            walker,
            seed,
            next_id: 0,
            restarts_new_tree: 0,
            restarts_relocated: 0,
            restarts_blocked: 0,
        }
    }

    /// A fresh arm at `node` with probability p₀ and its own walker stream.
    pub fn spawn(&mut self, position: Configuration, node: NodeId) -> Arm {
        let id = ArmId(self.next_id);
        self.next_id += 1;
        let mut rng = rng::stream(self.seed, rng::STREAM_WALKER_BASE + id.0);
        let sampler = LocalSampler::spawn(position, self.walker, &mut rng);
        Arm {
            id,
            sampler,
            probability: self.config.initial_probability,
            pulls: 0,
            node,
            rng,
        }
    }

    pub fn restarts(&self) -> u64 {
        self.restarts_new_tree + self.restarts_relocated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RestartOutcome {
    /// No arm was below η.
    NoRestart,
    /// The draw joined existing trees; the expired arm moved there.
    Joined { arm: usize, node: NodeId, joined_root: bool },
    /// The draw founded a new d-tree with a replacement arm.
    NewTree { arm: usize, tree: TreeId },
    /// The draw had neighbours within ε but every connecting segment was
    /// blocked, so it neither joined nor founded a tree.
    Blocked { arm: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub outcome: RestartOutcome,
    /// In-obstacle draws rejected while sampling the restart location.
    pub rejections: u64,
}

impl RestartReport {
    /// Whether a node (and possibly a tree) was added.
    pub fn added(&self) -> bool {
        matches!(self.outcome, RestartOutcome::Joined { .. } | RestartOutcome::NewTree { .. })
    }
}

/// Restart at most one expired arm (lowest id first) at a uniformly drawn
/// free configuration.
pub fn restart_arms(
    pool: &mut ArmPool,
    forest: &mut Forest,
    env: &Environment,
    epsilon: f64,
    resolution: f64,
    rng: &mut PlannerRng,
) -> Result<RestartReport, BanditError> {
    restart_arms_with(pool, forest, env, epsilon, resolution, || env.sample_free(rng))
}

/// [`restart_arms`] with an explicit source of restart locations.
pub fn restart_arms_with(
    pool: &mut ArmPool,
    forest: &mut Forest,
    env: &Environment,
    epsilon: f64,
    resolution: f64,
    mut draw: impl FnMut() -> Result<(Configuration, u64), EnvError>,
) -> Result<RestartReport, BanditError> {
    let eta = pool.config.eta;
    let Some(slot) = pool
        .arms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.probability < eta)
        .min_by_key(|(_, a)| a.id)
        .map(|(i, _)| i)
    else {
        return Ok(RestartReport {
            outcome: RestartOutcome::NoRestart,
            rejections: 0,
        });
    };
    let (q_rand, rejections) = draw()?;
    let outcome = match forest.join_within_epsilon(&q_rand, epsilon, env, resolution)? {
        JoinReport::Joined(join) => {
            let (walker, p0) = (pool.walker, pool.config.initial_probability);
            let old = &mut pool.arms[slot];
            // same identity and stream, fresh walker at the new location
            old.sampler = LocalSampler::spawn(q_rand, walker, &mut old.rng);
            old.probability = p0;
            old.node = join.node;
            pool.restarts_relocated += 1;
            RestartOutcome::Joined {
                arm: slot,
                node: join.node,
                joined_root: join.joined_root,
            }
        }
        JoinReport::NoJoin { blocked } if blocked > 0 => {
            pool.restarts_blocked += 1;
            RestartOutcome::Blocked { arm: slot }
        }
        JoinReport::NoJoin { .. } => {
            let tree = forest.insert_root(q_rand.clone(), TreeKind::DTree, env)?;
            let arm = pool.spawn(q_rand, tree.0);
            pool.arms[slot] = arm;
            pool.restarts_new_tree += 1;
            RestartOutcome::NewTree { arm: slot, tree }
        }
    };
    Ok(RestartReport { outcome, rejections })
}
