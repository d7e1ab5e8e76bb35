//! Configuration space: bounded occupancy grids with point and segment
//! validity queries and uniform free-space sampling.

mod io;
pub mod maps;
mod scenario;

use std::fmt;

use rand::Rng;
use thiserror::Error;

pub use io::{load_map, parse_binary_grid, parse_pgm, write_binary_grid, write_pgm, DEFAULT_OBSTACLE_THRESHOLD};
pub use scenario::{Scenario, ScenarioError};

/// Rejection cap for [`Environment::sample_free`].
pub const MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
    #[error("map has no free cell")]
    NoFreeSpace,
    #[error("gave up after {0} rejected samples")]
    RejectionCap(u64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unsupported map format: {0}")]
    UnsupportedFormat(String),
    #[error("cannot read map {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A point in C-space.
#[derive(Clone, PartialEq)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Self {
        Configuration(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Configuration) -> f64 {
        distance(&self.0, &other.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

impl<const N: usize> From<[f64; N]> for Configuration {
    fn from(v: [f64; N]) -> Self {
        Configuration(v.to_vec())
    }
}

impl std::ops::Index<usize> for Configuration {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{:?}", self.0)
    }
}

/// Squared Euclidean distance, summed in axis order.
#[inline]
pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    distance_sq(a, b).sqrt()
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// A bounded, axis-aligned occupancy grid.
///
/// Cells are stored with axis 0 varying fastest, so for rasters a cell index
/// is `y * width + x` with `x` the pixel column and `y` the pixel row.
#[derive(Clone)]
pub struct Environment {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    cell_size: Vec<f64>,
    strides: Vec<usize>,
    occupied: Vec<bool>,
    free_cells: usize,
    obstacle_threshold: f64,
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Environment")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("counts", &self.counts)
            .field("free_cells", &self.free_cells)
            .finish()
    }
}

impl Environment {
    /// Build an environment from a grid. `occupied` is indexed with axis 0 fastest.
    pub fn from_grid(
        lower: Vec<f64>,
        counts: Vec<usize>,
        cell_size: Vec<f64>,
        occupied: Vec<bool>,
    ) -> Result<Self, EnvError> {
        let dim = counts.len();
        if dim < 2 {
            return Err(EnvError::InvalidGrid(format!("dimension {dim} < 2")));
        }
        if lower.len() != dim || cell_size.len() != dim {
            return Err(EnvError::InvalidGrid("per-axis vectors disagree in length".into()));
        }
        if counts.contains(&0) {
            return Err(EnvError::InvalidGrid("zero cells along an axis".into()));
        }
        if cell_size.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(EnvError::InvalidGrid("cell size must be positive".into()));
        }
        let total: usize = counts.iter().product();
        if occupied.len() != total {
            return Err(EnvError::InvalidGrid(format!(
                "expected {total} cells, got {}",
                occupied.len()
            )));
        }
        let free_cells = occupied.iter().filter(|&&o| !o).count();
        if free_cells == 0 {
            return Err(EnvError::NoFreeSpace);
        }
        let mut strides = Vec::with_capacity(dim);
        let mut acc = 1;
        for &c in &counts {
            strides.push(acc);
            acc *= c;
        }
        let upper = (0..dim)
            .map(|i| lower[i] + counts[i] as f64 * cell_size[i])
            .collect();
        Ok(Environment {
            lower,
            upper,
            counts,
            cell_size,
            strides,
            occupied,
            free_cells,
            obstacle_threshold: DEFAULT_OBSTACLE_THRESHOLD,
        })
    }

    /// An obstacle-free world `[0, extent_i)` per axis with unit cells.
    pub fn empty(extents: &[usize]) -> Self {
        let total = extents.iter().product();
        Self::from_grid(
            vec![0.0; extents.len()],
            extents.to_vec(),
            vec![1.0; extents.len()],
            vec![false; total],
        )
        .expect("empty grid is valid")
    }

    pub(crate) fn with_threshold(mut self, threshold: f64) -> Self {
        self.obstacle_threshold = threshold;
        self
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size
    }

    pub fn obstacle_threshold(&self) -> f64 {
        self.obstacle_threshold
    }

    pub fn free_cell_count(&self) -> usize {
        self.free_cells
    }

    pub fn obstacle_cell_count(&self) -> usize {
        self.occupied.len() - self.free_cells
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    pub fn bounds_volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn free_volume(&self) -> f64 {
        self.free_cells as f64 * self.cell_volume()
    }

    pub fn free_fraction(&self) -> f64 {
        self.free_cells as f64 / self.occupied.len() as f64
    }

    pub fn diagonal(&self) -> f64 {
        distance(&self.lower, &self.upper)
    }

    /// Half the smallest cell edge; the default collision resolution.
    pub fn default_resolution(&self) -> f64 {
        0.5 * self.cell_size.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Whether the cell with the given multi-index is an obstacle.
    pub fn cell_occupied(&self, cell: &[usize]) -> bool {
        self.occupied[self.linear_index(cell)]
    }

    pub fn linear_index(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Multi-index of a linear cell index.
    pub fn cell_of_index(&self, mut idx: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let v = idx % c;
                idx /= c;
                v
            })
            .collect()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    /// Lower corner of a cell in world units.
    pub fn cell_origin(&self, cell: &[usize]) -> Vec<f64> {
        cell.iter()
            .enumerate()
            .map(|(i, &c)| self.lower[i] + c as f64 * self.cell_size[i])
            .collect()
    }

    fn check_dim(&self, got: usize) -> Result<(), EnvError> {
        if got != self.dim() {
            Err(EnvError::DimensionMismatch { expected: self.dim(), got })
        } else {
            Ok(())
        }
    }

    pub fn in_bounds(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&lo, &hi))| x >= lo && x < hi)
    }

    /// Cell containing `q`, or `None` when out of bounds.
    pub fn cell_of(&self, q: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for i in 0..q.len() {
            let x = q[i];
            if !(x >= self.lower[i] && x < self.upper[i]) {
                return None;
            }
            let c = ((x - self.lower[i]) / self.cell_size[i]) as usize;
            idx += c.min(self.counts[i] - 1) * self.strides[i];
        }
        Some(idx)
    }

    /// Point membership in C_free without a dimension check.
    #[inline]
    pub fn point_free(&self, q: &[f64]) -> bool {
        debug_assert_eq!(q.len(), self.dim());
        match self.cell_of(q) {
            Some(idx) => !self.occupied[idx],
            None => false,
        }
    }

    pub fn is_free(&self, q: &Configuration) -> Result<bool, EnvError> {
        self.check_dim(q.dim())?;
        Ok(self.point_free(q.coords()))
    }

    /// Segment validity by dense interpolation: `ceil(len / resolution) + 1`
    /// equally spaced points including both endpoints.
    pub fn segment_free(
        &self,
        a: &Configuration,
        b: &Configuration,
        resolution: f64,
    ) -> Result<bool, EnvError> {
        self.check_dim(a.dim())?;
        self.check_dim(b.dim())?;
        if !(resolution > 0.0) {
            return Err(EnvError::NonPositiveResolution(resolution));
        }
        Ok(self.path_free(a.coords(), b.coords(), resolution))
    }

    /// Unchecked form of [`segment_free`](Self::segment_free).
    pub fn path_free(&self, a: &[f64], b: &[f64], resolution: f64) -> bool {
        // Interpolate from the lexicographically smaller endpoint so that
        // (a, b) and (b, a) visit bit-identical points.
        let (a, b) = if lex_less(b, a) { (b, a) } else { (a, b) };
        if !self.point_free(a) || !self.point_free(b) {
            return false;
        }
        let len = distance(a, b);
        let steps = (len / resolution).ceil() as usize;
        if steps <= 1 {
            return true;
        }
        let denom = steps as f64;
        let mut p = vec![0.0; a.len()];
        for i in 1..steps {
            let t = i as f64 / denom;
            for k in 0..a.len() {
                p[k] = a[k] + (b[k] - a[k]) * t;
            }
            if !self.point_free(&p) {
                return false;
            }
        }
        true
    }

    /// A point drawn uniformly over the bounds.
    pub fn sample_bounds<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| {
                let x = lo + (hi - lo) * rng.random::<f64>();
                // guard the half-open upper bound against rounding
                if x < hi {
                    x
                } else {
                    lo
                }
            })
            .collect()
    }

    /// Uniform sample over C_free by rejection; also returns the number of
    /// rejected (in-obstacle) draws.
    pub fn sample_free<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(Configuration, u64), EnvError> {
        let mut rejected = 0;
        loop {
            let q = self.sample_bounds(rng);
            if self.point_free(&q) {
                return Ok((Configuration(q), rejected));
            }
            rejected += 1;
            if rejected >= MAX_REJECTIONS {
                return Err(EnvError::RejectionCap(rejected));
            }
        }
    }

    /// 4-connected (2d-connected in general) breadth-first search over free
    /// cells. Used to certify that a start/goal pair lies in one component.
    pub fn grid_connected(&self, a: &[f64], b: &[f64]) -> bool {
        let (Some(sa), Some(sb)) = (self.cell_of(a), self.cell_of(b)) else {
            return false;
        };
        if self.occupied[sa] || self.occupied[sb] {
            return false;
        }
        let mut seen = vec![false; self.occupied.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[sa] = true;
        queue.push_back(sa);
        while let Some(c) = queue.pop_front() {
            if c == sb {
                return true;
            }
            let cell = self.cell_of_index(c);
            for axis in 0..self.dim() {
                let s = self.strides[axis];
                if cell[axis] > 0 && !seen[c - s] && !self.occupied[c - s] {
                    seen[c - s] = true;
                    queue.push_back(c - s);
                }
                if cell[axis] + 1 < self.counts[axis] && !seen[c + s] && !self.occupied[c + s] {
                    seen[c + s] = true;
                    queue.push_back(c + s);
                }
            }
        }
        false
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn with_obstacles(w: usize, h: usize, cells: &[(usize, usize)]) -> Environment {
        let mut occ = vec![false; w * h];
        for &(x, y) in cells {
            occ[y * w + x] = true;
        }
        Environment::from_grid(vec![0.0, 0.0], vec![w, h], vec![1.0, 1.0], occ).unwrap()
    }

    fn q(x: f64, y: f64) -> Configuration {
        Configuration::from([x, y])
    }

    #[test]
    fn point_queries() {
        let empty = Environment::empty(&[10, 10]);
        assert!(empty.is_free(&q(5.0, 5.0)).unwrap());
        assert!(!empty.is_free(&q(-1.0, 5.0)).unwrap());
        assert!(!empty.is_free(&q(10.0, 5.0)).unwrap(), "upper bound is open");
        assert!(empty.is_free(&q(9.999, 0.0)).unwrap());

        let env = with_obstacles(10, 10, &[(2, 1)]);
        assert!(!env.is_free(&q(2.5, 1.5)).unwrap());
        assert!(env.is_free(&q(3.0, 1.5)).unwrap());
        assert!(matches!(
            env.is_free(&Configuration::from([1.0, 1.0, 1.0])),
            Err(EnvError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn segment_queries() {
        let env = with_obstacles(10, 10, &[(2, 1)]);
        assert!(env.segment_free(&q(1.0, 1.0), &q(1.0, 1.0), 0.5).unwrap());
        assert!(!env.segment_free(&q(0.5, 0.5), &q(2.5, 1.5), 0.5).unwrap());
        assert!(matches!(
            env.segment_free(&q(0.5, 0.5), &q(2.5, 1.5), 0.0),
            Err(EnvError::NonPositiveResolution(_))
        ));
    }

    /// Dense per-cell traversal: every cell the open segment passes through,
    /// found by stepping far below the cell size.
    fn cells_crossed(a: (f64, f64), b: (f64, f64)) -> Vec<(usize, usize)> {
        let n = 10_000;
        let mut out = Vec::new();
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let c = (
                (a.0 + (b.0 - a.0) * t).floor() as usize,
                (a.1 + (b.1 - a.1) * t).floor() as usize,
            );
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
        out
    }

    #[test]
    fn wall_blocks_segment() {
        let wall: Vec<_> = (0..10).map(|y| (4, y)).collect();
        let env = with_obstacles(10, 10, &wall);
        let crossed = cells_crossed((1.0, 5.0), (8.0, 5.0));
        assert!(crossed.iter().any(|c| wall.contains(c)));
        assert!(!env.segment_free(&q(1.0, 5.0), &q(8.0, 5.0), 0.5).unwrap());
        assert!(env.segment_free(&q(1.0, 5.0), &q(3.9, 5.0), 0.5).unwrap());
    }

    #[test]
    fn sample_free_on_single_free_cell() {
        let mut occ = vec![true; 16];
        occ[2 * 4 + 3] = false;
        let env = Environment::from_grid(vec![0.0, 0.0], vec![4, 4], vec![1.0, 1.0], occ).unwrap();
        let mut r = rng::stream(1, 0);
        for _ in 0..200 {
            let (p, _) = env.sample_free(&mut r).unwrap();
            assert!((3.0..4.0).contains(&p[0]) && (2.0..3.0).contains(&p[1]));
        }
    }

    #[test]
    fn empty_map_never_rejects() {
        let env = Environment::empty(&[10, 10]);
        let mut r = rng::stream(2, 0);
        for _ in 0..1000 {
            let (p, rej) = env.sample_free(&mut r).unwrap();
            assert_eq!(rej, 0);
            assert!(env.in_bounds(p.coords()));
        }
    }

    #[test]
    fn all_obstacle_grid_rejected() {
        let err = Environment::from_grid(vec![0.0, 0.0], vec![2, 2], vec![1.0, 1.0], vec![true; 4]);
        assert!(matches!(err, Err(EnvError::NoFreeSpace)));
    }

    #[test]
    fn grid_bfs_respects_walls() {
        let wall: Vec<_> = (0..10).map(|y| (4, y)).collect();
        let env = with_obstacles(10, 10, &wall);
        assert!(!env.grid_connected(&[1.0, 1.0], &[8.0, 8.0]));
        assert!(env.grid_connected(&[1.0, 1.0], &[3.0, 8.0]));
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
