//! The set of disjointed trees plus the root tree.
//!
//! Every node lives in one id-indexed store and one spatial index. Tree
//! membership is a union-find partition; a tree is identified by the id of
//! its root node, so the tree containing the start configuration keeps the
//! same [`TreeId`] through every merge.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::env::{Configuration, Environment};
use crate::index::KdIndex;

/// Relative slack on the ε-join radius, so that a walker step of exactly ε
/// always reaches the node it started from despite rounding.
const JOIN_SLACK: f64 = 1e-9;
/// Minimum cost improvement for a re-parenting to count.
const COST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Canonical tree id: the id of the tree's root node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeId(pub NodeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    Root,
    DTree,
}

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("configuration {0:?} is not free")]
    NotFree(Configuration),
    #[error("the forest already has a root tree")]
    RootExists,
    #[error("cannot merge tree {0:?} with itself")]
    SelfMerge(TreeId),
    #[error("bridge node {0} is not in the expected tree")]
    BridgeMismatch(NodeId),
    #[error("node {0} is not in the root tree")]
    NotInRootTree(NodeId),
    #[error("the forest is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
struct Node {
    config: Configuration,
    parent: Option<NodeId>,
    cost: f64,
    children: Vec<NodeId>,
}

#[derive(Debug, Clone)]
struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Root node of the tree, valid at set representatives.
    tree_root: Vec<u32>,
}

impl DisjointSets {
    fn push(&mut self, id: u32) {
        self.parent.push(id);
        self.size.push(1);
        self.tree_root.push(id);
    }

    fn add_to(&mut self, id: u32, member_of: u32) {
        let rep = self.find(member_of);
        self.parent.push(rep);
        self.size.push(0);
        self.tree_root.push(id);
        self.size[rep as usize] += 1;
    }

    fn find(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    fn compress(&mut self, x: u32) {
        let rep = self.find(x);
        let mut cur = x;
        while self.parent[cur as usize] != rep {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = rep;
            cur = next;
        }
    }

    /// Union by size; the merged set's tree root becomes `tree_root`.
    fn union(&mut self, a: u32, b: u32, tree_root: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.tree_root[big as usize] = tree_root;
    }
}

/// Record of a tree's creation, kept for separation checks.
#[derive(Debug, Clone, Copy)]
pub struct TreeCreation {
    pub root: NodeId,
    pub kind: TreeKind,
    /// Distance to the nearest node that existed at creation time.
    pub nearest_distance: Option<f64>,
}

/// Outcome of an ε-join attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum JoinReport {
    /// Nothing reachable within ε. `blocked` counts neighbours within ε
    /// whose connecting segment was in collision.
    NoJoin { blocked: usize },
    Joined(Join),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Join {
    pub node: NodeId,
    pub parent: NodeId,
    /// Distinct trees the new node connected to, as they were before merging.
    pub joined_trees: Vec<TreeId>,
    /// The tree holding the new node after all merges.
    pub tree: TreeId,
    pub joined_root: bool,
}

impl JoinReport {
    pub fn joined(&self) -> Option<&Join> {
        match self {
            JoinReport::Joined(j) => Some(j),
            JoinReport::NoJoin { .. } => None,
        }
    }
}

/// A feasible path read out of the root tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Configuration>,
    pub cost: f64,
}

impl Path {
    /// Cost recomputed from the waypoints.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    /// Re-check every segment against the map.
    pub fn is_feasible(&self, env: &Environment, resolution: f64) -> bool {
        !self.waypoints.is_empty()
            && self.waypoints.iter().all(|q| env.point_free(q.coords()))
            && self
                .waypoints
                .windows(2)
                .all(|w| env.path_free(w[0].coords(), w[1].coords(), resolution))
    }
}

/// Shrinking-ball radius `min(ε, γ (ln n / n)^(1/d))`.
pub fn rewire_radius(n: usize, gamma: f64, epsilon: f64, dim: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n = n as f64;
    epsilon.min(gamma * (n.ln() / n).powf(1.0 / dim as f64))
}

/// Default rewiring constant `2 (1 + 1/d)^(1/d) (μ(C_free) / ζ_d)^(1/d)`.
pub fn default_rewire_gamma(env: &Environment) -> f64 {
    let d = env.dim() as f64;
    2.0 * (1.0 + 1.0 / d).powf(1.0 / d)
        * (env.free_volume() / crate::env::unit_ball_volume(env.dim())).powf(1.0 / d)
}

#[derive(Debug, Clone)]
pub struct Forest {
    dim: usize,
    nodes: Vec<Node>,
    sets: DisjointSets,
    index: KdIndex,
    root: Option<NodeId>,
    trees_created: u64,
    creations: Vec<TreeCreation>,
}

impl Forest {
    pub fn new(dim: usize) -> Self {
        Forest {
            dim,
            nodes: Vec::new(),
            sets: DisjointSets {
                parent: Vec::new(),
                size: Vec::new(),
                tree_root: Vec::new(),
            },
            index: KdIndex::new(dim),
            root: None,
            trees_created: 0,
            creations: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn config(&self, id: NodeId) -> &Configuration {
        &self.nodes[id.index()].config
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    /// Cost-to-root; infinite outside the root tree.
    pub fn cost(&self, id: NodeId) -> f64 {
        self.nodes[id.index()].cost
    }

    pub fn trees_created(&self) -> u64 {
        self.trees_created
    }

    pub fn creations(&self) -> &[TreeCreation] {
        &self.creations
    }

    pub fn root_node(&self) -> Option<NodeId> {
        self.root
    }

    pub fn root_tree(&self) -> Option<TreeId> {
        self.root.map(|r| self.tree_of(r))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn tree_of(&self, id: NodeId) -> TreeId {
        let rep = self.sets.find(id.0);
        TreeId(NodeId(self.sets.tree_root[rep as usize]))
    }

    pub fn tree_size(&self, tree: TreeId) -> usize {
        self.sets.size[self.sets.find(tree.0 .0) as usize] as usize
    }

    pub fn in_root_tree(&self, id: NodeId) -> bool {
        match self.root {
            Some(r) => self.sets.find(r.0) == self.sets.find(id.0),
            None => false,
        }
    }

    /// Number of distinct trees currently in the forest.
    pub fn tree_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.parent.is_none()).count()
    }

    /// Edges as `(child, parent)` pairs in child-id order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.parent.map(|p| (NodeId(i as u32), p)))
    }

    fn check_dim(&self, q: &Configuration) -> Result<(), ForestError> {
        if q.dim() != self.dim {
            return Err(ForestError::DimensionMismatch { expected: self.dim, got: q.dim() });
        }
        Ok(())
    }

    fn push_node(&mut self, config: Configuration, parent: Option<NodeId>, cost: f64) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.index.insert(config.coords());
        self.nodes.push(Node {
            config,
            parent,
            cost,
            children: Vec::new(),
        });
        match parent {
            Some(p) => {
                self.sets.add_to(id.0, p.0);
                self.nodes[p.index()].children.push(id);
            }
            None => self.sets.push(id.0),
        }
        id
    }

    /// Start a new singleton tree at `q`.
    pub fn insert_root(&mut self, q: Configuration, kind: TreeKind, env: &Environment) -> Result<TreeId, ForestError> {
        self.check_dim(&q)?;
        if !env.point_free(q.coords()) {
            return Err(ForestError::NotFree(q));
        }
        if kind == TreeKind::Root && self.root.is_some() {
            return Err(ForestError::RootExists);
        }
        let nearest_distance = self.index.nearest(q.coords()).map(|(_, d)| d);
        let cost = if kind == TreeKind::Root { 0.0 } else { f64::INFINITY };
        let id = self.push_node(q, None, cost);
        if kind == TreeKind::Root {
            self.root = Some(id);
        }
        self.trees_created += 1;
        self.creations.push(TreeCreation {
            root: id,
            kind,
            nearest_distance,
        });
        Ok(TreeId(id))
    }

    /// Add `q` as a child of `parent`. The caller has validated the edge.
    pub fn attach(&mut self, q: Configuration, parent: NodeId) -> NodeId {
        debug_assert_eq!(q.dim(), self.dim);
        let p = &self.nodes[parent.index()];
        let cost = if p.cost.is_finite() { p.cost + p.config.distance(&q) } else { f64::INFINITY };
        self.push_node(q, Some(parent), cost)
    }

    pub fn nearest(&self, q: &Configuration) -> Result<NodeId, ForestError> {
        self.check_dim(q)?;
        self.index
            .nearest(q.coords())
            .map(|(id, _)| NodeId(id as u32))
            .ok_or(ForestError::Empty)
    }

    /// Nearest node belonging to `tree`.
    pub fn nearest_in_tree(&self, q: &Configuration, tree: TreeId) -> Option<NodeId> {
        let rep = self.sets.find(tree.0 .0);
        self.index
            .nearest_where(q.coords(), |id| self.sets.find(id as u32) == rep)
            .map(|(id, _)| NodeId(id as u32))
    }

    /// Nodes within the closed ball of radius `r`, ascending by id.
    pub fn within_radius(&self, q: &Configuration, r: f64) -> Vec<NodeId> {
        self.index
            .within_radius(q.coords(), r)
            .into_iter()
            .map(|i| NodeId(i as u32))
            .collect()
    }

    /// Connect `q` to every tree that has a node within `epsilon` reachable
    /// by a free segment, merging all of those trees through `q`.
    ///
    /// The new node's parent is the root-tree neighbour minimising
    /// cost-to-root plus edge length when one exists, otherwise the nearest
    /// reachable neighbour.
    pub fn join_within_epsilon(
        &mut self,
        q: &Configuration,
        epsilon: f64,
        env: &Environment,
        resolution: f64,
    ) -> Result<JoinReport, ForestError> {
        self.check_dim(q)?;
        let mut reachable = Vec::new();
        let mut blocked = 0;
        for id in self.index.within_radius(q.coords(), epsilon * (1.0 + JOIN_SLACK)) {
            let p = self.index.point(id);
            if env.path_free(p, q.coords(), resolution) {
                let node = NodeId(id as u32);
                reachable.push((node, self.tree_of(node), crate::env::distance(p, q.coords())));
            } else {
                blocked += 1;
            }
        }
        if reachable.is_empty() {
            return Ok(JoinReport::NoJoin { blocked });
        }
        let root_tree = self.root_tree();
        let root_side = reachable
            .iter()
            .filter(|(_, t, _)| Some(*t) == root_tree)
            .map(|&(n, _, d)| (self.cost(n) + d, n))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let parent = match root_side {
            Some((_, n)) => n,
            None => {
                reachable
                    .iter()
                    .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
                    .expect("nonempty")
                    .0
            }
        };
        let parent_tree = self.tree_of(parent);
        let node = self.attach(q.clone(), parent);

        let mut joined_trees: Vec<TreeId> = reachable.iter().map(|r| r.1).collect();
        joined_trees.sort();
        joined_trees.dedup();
        for &tree in &joined_trees {
            if tree == parent_tree {
                continue;
            }
            let bridge = reachable
                .iter()
                .filter(|r| r.1 == tree)
                .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
                .expect("tree has a reachable node")
                .0;
            let current = self.tree_of(node);
            self.merge_trees(current, tree, (node, bridge))?;
        }
        let tree = self.tree_of(node);
        Ok(JoinReport::Joined(Join {
            node,
            parent,
            joined_root: root_tree.is_some() && joined_trees.contains(&root_tree.unwrap()),
            joined_trees,
            tree,
        }))
    }

    /// Merge two trees across a validated bridge edge `(node in a, node in b)`.
    ///
    /// The root tree always survives; otherwise the larger tree keeps its
    /// structure. The absorbed tree is re-rooted at its bridge node and hung
    /// from the other bridge node.
    pub fn merge_trees(&mut self, tree_a: TreeId, tree_b: TreeId, bridge: (NodeId, NodeId)) -> Result<TreeId, ForestError> {
        if tree_a == tree_b {
            return Err(ForestError::SelfMerge(tree_a));
        }
        if self.tree_of(bridge.0) != tree_a {
            return Err(ForestError::BridgeMismatch(bridge.0));
        }
        if self.tree_of(bridge.1) != tree_b {
            return Err(ForestError::BridgeMismatch(bridge.1));
        }
        let root_tree = self.root_tree();
        let a_keeps = if Some(tree_a) == root_tree {
            true
        } else if Some(tree_b) == root_tree {
            false
        } else {
            let (sa, sb) = (self.tree_size(tree_a), self.tree_size(tree_b));
            sa > sb || (sa == sb && tree_a < tree_b)
        };
        let (keeper, keep_node, absorb_node) = if a_keeps {
            (tree_a, bridge.0, bridge.1)
        } else {
            (tree_b, bridge.1, bridge.0)
        };
        self.reroot(absorb_node);
        self.nodes[absorb_node.index()].parent = Some(keep_node);
        self.nodes[keep_node.index()].children.push(absorb_node);
        self.sets.union(keep_node.0, absorb_node.0, keeper.0 .0);
        self.sets.compress(absorb_node.0);
        if Some(keeper) == root_tree {
            self.propagate_costs(absorb_node);
        }
        Ok(keeper)
    }

    /// Make `id` the root of its tree by reversing the parent chain above it.
    fn reroot(&mut self, id: NodeId) {
        let mut prev: Option<NodeId> = None;
        let mut cur = Some(id);
        while let Some(c) = cur {
            let next = self.nodes[c.index()].parent;
            if let Some(n) = next {
                remove_child(&mut self.nodes[n.index()].children, c);
            }
            if let Some(p) = prev {
                self.nodes[p.index()].children.push(c);
            }
            self.nodes[c.index()].parent = prev;
            prev = Some(c);
            cur = next;
        }
    }

    fn set_parent(&mut self, id: NodeId, parent: NodeId) {
        if let Some(old) = self.nodes[id.index()].parent {
            remove_child(&mut self.nodes[old.index()].children, id);
        }
        self.nodes[id.index()].parent = Some(parent);
        self.nodes[parent.index()].children.push(id);
    }

    /// Recompute cost-to-root for `from` and its whole subtree.
    fn propagate_costs(&mut self, from: NodeId) {
        let mut queue = VecDeque::from([from]);
        while let Some(id) = queue.pop_front() {
            let node = &self.nodes[id.index()];
            let cost = match node.parent {
                Some(p) => {
                    let parent = &self.nodes[p.index()];
                    parent.cost + parent.config.distance(&node.config)
                }
                None => 0.0,
            };
            self.nodes[id.index()].cost = cost;
            queue.extend(self.nodes[id.index()].children.iter().copied());
        }
    }

    /// Two-phase RRT* rewiring around `new_node` over root-tree nodes within
    /// [`rewire_radius`]: choose the cheapest parent, then re-parent any
    /// neighbour that becomes cheaper through `new_node`. Returns the number
    /// of re-parented neighbours.
    pub fn rewire(
        &mut self,
        new_node: NodeId,
        env: &Environment,
        resolution: f64,
        radius_constant: f64,
        epsilon: f64,
    ) -> Result<usize, ForestError> {
        if !self.in_root_tree(new_node) {
            return Err(ForestError::NotInRootTree(new_node));
        }
        let n = self.tree_size(self.root_tree().expect("root exists"));
        let r = rewire_radius(n, radius_constant, epsilon, self.dim);
        if r <= 0.0 {
            return Ok(0);
        }
        let q = self.nodes[new_node.index()].config.clone();
        let mut neighbours: Vec<(NodeId, f64)> = self
            .within_radius(&q, r)
            .into_iter()
            .filter(|&id| id != new_node && self.in_root_tree(id))
            .map(|id| (id, self.config(id).distance(&q)))
            .collect();

        // choose-parent
        let current = self.cost(new_node);
        let mut candidates: Vec<(f64, NodeId, f64)> =
            neighbours.iter().map(|&(id, d)| (self.cost(id) + d, id, d)).collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(c, id, _) in &candidates {
            if c >= current - COST_TOL {
                break;
            }
            if Some(id) == self.parent(new_node) {
                continue;
            }
            if env.path_free(self.config(id).coords(), q.coords(), resolution) {
                self.set_parent(new_node, id);
                self.propagate_costs(new_node);
                break;
            }
        }

        // rewire neighbours
        let parent = self.parent(new_node);
        neighbours.retain(|&(id, _)| Some(id) != parent);
        let mut rewired = 0;
        for (id, d) in neighbours {
            let via_new = self.cost(new_node) + d;
            if via_new < self.cost(id) - COST_TOL && env.path_free(self.config(id).coords(), q.coords(), resolution) {
                self.set_parent(id, new_node);
                self.propagate_costs(id);
                rewired += 1;
            }
        }
        Ok(rewired)
    }

    /// Waypoints from the start configuration to `goal`.
    pub fn extract_path(&self, goal: NodeId) -> Result<Path, ForestError> {
        if !self.in_root_tree(goal) {
            return Err(ForestError::NotInRootTree(goal));
        }
        let mut waypoints = Vec::new();
        let mut cur = Some(goal);
        while let Some(id) = cur {
            waypoints.push(self.config(id).clone());
            cur = self.parent(id);
        }
        waypoints.reverse();
        Ok(Path {
            waypoints,
            cost: self.cost(goal),
        })
    }

    /// Exhaustive structural check: acyclic parent links within one
    /// partition, tree roots agree with the partition, and root-tree costs
    /// equal parent cost plus edge length.
    pub fn check_invariants(&self) -> Result<(), String> {
        // Memoised walk to the root: every node is resolved once.
        let n = self.nodes.len();
        let mut root_of: Vec<Option<NodeId>> = vec![None; n];
        let mut on_path = vec![false; n];
        let mut path = Vec::new();
        for id in self.node_ids() {
            path.clear();
            let mut cur = id;
            let reached = loop {
                if let Some(r) = root_of[cur.index()] {
                    break r;
                }
                if on_path[cur.index()] {
                    return Err(format!("cycle above node {id}"));
                }
                on_path[cur.index()] = true;
                path.push(cur);
                match self.parent(cur) {
                    Some(p) => {
                        if self.tree_of(p) != self.tree_of(cur) {
                            return Err(format!("edge {cur}->{p} crosses trees"));
                        }
                        cur = p;
                    }
                    None => break cur,
                }
            };
            for &v in &path {
                root_of[v.index()] = Some(reached);
                on_path[v.index()] = false;
            }
            if self.tree_of(id) != TreeId(reached) {
                return Err(format!("node {id} reaches root {reached} but is filed under {:?}", self.tree_of(id)));
            }
            let node = &self.nodes[id.index()];
            if self.in_root_tree(id) {
                let expected = match node.parent {
                    Some(p) => self.cost(p) + self.config(p).distance(&node.config),
                    None => 0.0,
                };
                if (node.cost - expected).abs() > 1e-9 * (1.0 + expected) {
                    return Err(format!("node {id}: cost {} != {}", node.cost, expected));
                }
            } else if node.cost.is_finite() {
                return Err(format!("node {id} outside the root tree has finite cost"));
            }
            for &c in &node.children {
                if self.parent(c) != Some(id) {
                    return Err(format!("child list of {id} holds {c}"));
                }
            }
        }
        Ok(())
    }

    /// One line per node: `node <id> <coords...> parent=<id|-> cost=<v> tree=<id>`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for id in self.node_ids() {
            let node = &self.nodes[id.index()];
            let _ = write!(s, "node {id}");
            for c in node.config.coords() {
                let _ = write!(s, " {c}");
            }
            let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
            let _ = writeln!(s, " parent={parent} cost={} tree={}", node.cost, self.tree_of(id).0);
        }
        s
    }
}

fn remove_child(children: &mut Vec<NodeId>, c: NodeId) {
    if let Some(pos) = children.iter().position(|&x| x == c) {
        children.swap_remove(pos);
    }
}
