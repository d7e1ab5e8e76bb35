use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{GraphSnapshot, PlanError, PlanParams, PlannerKind, PlannerResult, Recorder};
use crate::env::{Configuration, Environment, Scenario};
use crate::forest::{rewire_radius, Path};
use crate::index::KdIndex;
use crate::rng;

/// Added samples between shortest-path queries.
pub const PRM_QUERY_INTERVAL: u64 = 250;

/// Undirected roadmap with Euclidean edge weights.
#[derive(Debug, Clone)]
pub struct Roadmap {
    index: KdIndex,
    adjacency: Vec<Vec<(u32, f64)>>,
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on cost, then id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Roadmap {
    pub fn new(dim: usize) -> Self {
        Roadmap {
            index: KdIndex::new(dim),
            adjacency: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn point(&self, v: usize) -> &[f64] {
        self.index.point(v)
    }

    pub fn neighbours(&self, v: usize) -> &[(u32, f64)] {
        &self.adjacency[v]
    }

    pub fn add_vertex(&mut self, q: &[f64]) -> usize {
        self.adjacency.push(Vec::new());
        self.index.insert(q)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        let w = crate::env::distance(self.point(a), self.point(b));
        self.adjacency[a].push((b as u32, w));
        self.adjacency[b].push((a as u32, w));
    }

    /// Insert `q` and connect it to every vertex within `radius` over a
    /// free segment. Returns the new vertex id.
    pub fn connect(&mut self, q: &[f64], radius: f64, env: &Environment, resolution: f64) -> usize {
        let near = self.index.within_radius(q, radius);
        let v = self.add_vertex(q);
        for u in near {
            if env.path_free(self.point(u), q, resolution) {
                self.add_edge(u, v);
            }
        }
        v
    }

    /// Edges as `(a, b)` with `a < b`, in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            nbrs.iter().filter(move |(b, _)| (*b as usize) > a).map(move |&(b, _)| (a as u32, b))
        })
    }

    /// Shortest path from `s` to `t`: total weight and vertex sequence.
    pub fn shortest_path(&self, s: usize, t: usize) -> Option<(f64, Vec<usize>)> {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(Entry(0.0, s as u32));
        while let Some(Entry(d, v)) = heap.pop() {
            let v = v as usize;
            if d > dist[v] {
                continue;
            }
            if v == t {
                break;
            }
            for &(u, w) in &self.adjacency[v] {
                let nd = d + w;
                if nd < dist[u as usize] {
                    dist[u as usize] = nd;
                    prev[u as usize] = v as u32;
                    heap.push(Entry(nd, u));
                }
            }
        }
        if !dist[t].is_finite() {
            return None;
        }
        let mut seq = vec![t];
        let mut cur = t;
        while cur != s {
            cur = prev[cur] as usize;
            seq.push(cur);
        }
        seq.reverse();
        Some((dist[t], seq))
    }
}

pub fn plan_prm_star(scenario: &Scenario, env: &Environment) -> Result<PlannerResult, PlanError> {
    let params = PlanParams::resolve(scenario, env)?;
    let mut rng = rng::stream(params.seed, rng::STREAM_GLOBAL);
    let mut map = Roadmap::new(env.dim());
    let start = map.add_vertex(params.start.coords());
    let goal = map.add_vertex(params.goal.coords());
    let mut rec = Recorder::default();
    let mut best: Option<(f64, Vec<usize>)> = None;

    let mut query = |map: &Roadmap, rec: &mut Recorder| {
        if let Some((c, seq)) = map.shortest_path(start, goal) {
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                rec.offer_solution(c);
                best = Some((c, seq));
            }
        }
    };

    while rec.nodes() < params.node_budget && rec.iteration() < params.max_iterations {
        rec.next_iteration();
        let q = env.sample_bounds(&mut rng);
        if !env.point_free(&q) {
            rec.in_obstacle(1);
            continue;
        }
        let n = map.len() + 1;
        let r = rewire_radius(n, params.rewire_gamma, f64::INFINITY, env.dim());
        map.connect(&q, r, env, params.resolution);
        rec.node_added();
        if rec.nodes() % PRM_QUERY_INTERVAL == 0 {
            query(&map, &mut rec);
        }
    }
    if rec.nodes() >= PRM_QUERY_INTERVAL && rec.nodes() % PRM_QUERY_INTERVAL != 0 {
        query(&map, &mut rec);
    }

    let path = best.map(|(cost, seq)| Path {
        waypoints: seq.into_iter().map(|v| Configuration::new(map.point(v).to_vec())).collect(),
        cost,
    });
    let graph = GraphSnapshot {
        nodes: (0..map.len()).map(|v| map.point(v).to_vec()).collect(),
        tree: vec![0; map.len()],
        edges: map.edges().collect(),
        arms: Vec::new(),
    };
    Ok(rec.finish(PlannerKind::PrmStar, &params, path, graph))
}
