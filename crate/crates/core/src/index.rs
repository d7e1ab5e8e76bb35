//! Exact nearest-neighbour and radius queries over a growing point set.
//!
//! Points are addressed by dense ids `0..len`. A balanced kd-tree covers the
//! first `built` ids; later insertions sit in a linear side buffer until the
//! buffer exceeds `max(64, built / 4)`, at which point the tree is rebuilt.

use crate::env::distance_sq;

const MIN_REBUILD: usize = 64;

#[derive(Debug, Clone)]
pub struct KdIndex {
    dim: usize,
    coords: Vec<f64>,
    /// Implicit tree: the median of each sub-range is its splitting node.
    order: Vec<u32>,
    built: usize,
}

impl KdIndex {
    pub fn new(dim: usize) -> Self {
        KdIndex {
            dim,
            coords: Vec::new(),
            order: Vec::new(),
            built: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.coords[id * self.dim..(id + 1) * self.dim]
    }

    /// Append a point; returns its id.
    pub fn insert(&mut self, p: &[f64]) -> usize {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
        let n = self.len();
        if n - self.built > MIN_REBUILD.max(self.built / 4) {
            self.rebuild();
        }
        n - 1
    }

    fn rebuild(&mut self) {
        let n = self.len();
        self.order = (0..n as u32).collect();
        let (dim, coords) = (self.dim, &self.coords);
        build(&mut self.order, 0, dim, coords);
        self.built = n;
    }

    /// Nearest point to `q` among those accepted by `keep`; ties go to the
    /// lowest id.
    pub fn nearest_where(&self, q: &[f64], keep: impl Fn(usize) -> bool) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize)> = None;
        let mut consider = |id: usize, d2: f64| {
            if !keep(id) {
                return;
            }
            match best {
                Some((bd, bi)) if (d2, id) >= (bd, bi) => {}
                _ => best = Some((d2, id)),
            }
        };
        for id in self.built..self.len() {
            consider(id, distance_sq(q, self.point(id)));
        }
        self.nearest_rec(&self.order[..self.built], 0, q, &mut best, &keep);
        best.map(|(d2, id)| (id, d2.sqrt()))
    }

    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        self.nearest_where(q, |_| true)
    }

    fn nearest_rec(
        &self,
        slice: &[u32],
        depth: usize,
        q: &[f64],
        best: &mut Option<(f64, usize)>,
        keep: &impl Fn(usize) -> bool,
    ) {
        if slice.is_empty() {
            return;
        }
        let mid = slice.len() / 2;
        let id = slice[mid] as usize;
        let p = self.point(id);
        if keep(id) {
            let d2 = distance_sq(q, p);
            match *best {
                Some((bd, bi)) if (d2, id) >= (bd, bi) => {}
                _ => *best = Some((d2, id)),
            }
        }
        let axis = depth % self.dim;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (&slice[..mid], &slice[mid + 1..])
        } else {
            (&slice[mid + 1..], &slice[..mid])
        };
        self.nearest_rec(near, depth + 1, q, best, keep);
        let prune = matches!(*best, Some((bd, _)) if diff * diff > bd);
        if !prune {
            self.nearest_rec(far, depth + 1, q, best, keep);
        }
    }

    /// All ids within the closed ball of radius `r` around `q`, ascending.
    pub fn within_radius(&self, q: &[f64], r: f64) -> Vec<usize> {
        let r2 = r * r;
        let mut out: Vec<usize> = (self.built..self.len())
            .filter(|&id| distance_sq(q, self.point(id)) <= r2)
            .collect();
        self.radius_rec(&self.order[..self.built], 0, q, r2, &mut out);
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, slice: &[u32], depth: usize, q: &[f64], r2: f64, out: &mut Vec<usize>) {
        if slice.is_empty() {
            return;
        }
        let mid = slice.len() / 2;
        let id = slice[mid] as usize;
        let p = self.point(id);
        if distance_sq(q, p) <= r2 {
            out.push(id);
        }
        let axis = depth % self.dim;
        let diff = q[axis] - p[axis];
        if diff <= 0.0 || diff * diff <= r2 {
            self.radius_rec(&slice[..mid], depth + 1, q, r2, out);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.radius_rec(&slice[mid + 1..], depth + 1, q, r2, out);
        }
    }
}

fn build(slice: &mut [u32], depth: usize, dim: usize, coords: &[f64]) {
    if slice.len() <= 1 {
        return;
    }
    let axis = depth % dim;
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        let ka = coords[a as usize * dim + axis];
        let kb = coords[b as usize * dim + axis];
        ka.total_cmp(&kb).then(a.cmp(&b))
    });
    let (left, rest) = slice.split_at_mut(mid);
    build(left, depth + 1, dim, coords);
    build(&mut rest[1..], depth + 1, dim, coords);
}
