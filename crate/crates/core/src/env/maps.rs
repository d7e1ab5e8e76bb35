//! Bundled 400×400 benchmark worlds, generated deterministically.
//!
//! * `room` – a floor plan with thin walls and doorways (least constrained).
//! * `maze` – a perfect maze carved on a 12×12 lattice, walls thicker than
//!   the usual step size.
//! * `clutter` – seeded random squares (20–40 px) at about 45% occupancy.
//!
//! Refer to them as `bundled:<name>` anywhere a map path is accepted.

use rand::Rng;

use super::{EnvError, Environment};
use crate::rng;

pub const BUNDLED_PREFIX: &str = "bundled:";
pub const BUNDLED_NAMES: [&str; 3] = ["room", "maze", "clutter"];
pub const SIZE: usize = 400;

const MAZE_CELLS: usize = 12;
const MAZE_WALL: usize = 16;
const MAZE_SEED: u64 = 0x6D617A65;
const CLUTTER_OCCUPANCY: f64 = 0.45;
const CLUTTER_SIDES: (usize, usize) = (20, 40);
const CLUTTER_SEED: u64 = 0x636C7574;
const CLUTTER_CLEARANCE: usize = 3;

pub fn bundled(name: &str) -> Result<Environment, EnvError> {
    match name {
        "room" => Ok(room()),
        "maze" => Ok(maze()),
        "clutter" => Ok(clutter()),
        other => Err(EnvError::UnsupportedFormat(format!("no bundled map named {other:?}"))),
    }
}

/// A far-apart start/goal pair known to be connected on the named map.
pub fn canonical_pair(name: &str) -> Option<([f64; 2], [f64; 2])> {
    match name {
        "room" => Some(([30.0, 30.0], [370.0, 370.0])),
        "maze" => {
            // centres of the first and last lattice cells
            let pitch = (SIZE / MAZE_CELLS) as f64;
            let far = (MAZE_CELLS as f64 - 0.5) * pitch;
            Some(([0.5 * pitch, 0.5 * pitch], [far, far]))
        }
        "clutter" => Some(([15.0, 15.0], [385.0, 385.0])),
        _ => None,
    }
}

struct Canvas {
    occ: Vec<bool>,
}

impl Canvas {
    fn new() -> Self {
        Canvas { occ: vec![false; SIZE * SIZE] }
    }

    fn fill(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, value: bool) {
        for y in y0.min(SIZE)..y1.min(SIZE) {
            for x in x0.min(SIZE)..x1.min(SIZE) {
                self.occ[y * SIZE + x] = value;
            }
        }
    }

    fn border(&mut self, t: usize) {
        self.fill(0, 0, SIZE, t, true);
        self.fill(0, SIZE - t, SIZE, SIZE, true);
        self.fill(0, 0, t, SIZE, true);
        self.fill(SIZE - t, 0, SIZE, SIZE, true);
    }

    /// Obstacles grown by `r` pixels in every direction (square structuring
    /// element).
    fn dilated(&self, r: usize) -> Canvas {
        let mut out = Canvas::new();
        for y in 0..SIZE {
            for x in 0..SIZE {
                if self.occ[y * SIZE + x] {
                    out.fill(x.saturating_sub(r), y.saturating_sub(r), x + r + 1, y + r + 1, true);
                }
            }
        }
        out
    }

    fn finish(self) -> Environment {
        Environment::from_grid(vec![0.0, 0.0], vec![SIZE, SIZE], vec![1.0, 1.0], self.occ)
            .expect("bundled maps have free space")
    }
}

pub fn room() -> Environment {
    let mut c = Canvas::new();
    let t = 4;
    c.border(t);
    // interior walls: (x0, y0, x1, y1)
    let walls = [
        (130, 0, 134, 400),
        (270, 0, 274, 400),
        (0, 200, 130, 204),
        (274, 150, 400, 154),
        (274, 280, 400, 284),
        (134, 260, 270, 264),
    ];
    for &(x0, y0, x1, y1) in &walls {
        c.fill(x0, y0, x1, y1, true);
    }
    // doorways
    let doors = [
        (130, 90, 134, 135),
        (130, 300, 134, 345),
        (270, 60, 274, 105),
        (270, 320, 274, 365),
        (50, 200, 95, 204),
        (320, 150, 365, 154),
        (300, 280, 345, 284),
        (180, 260, 225, 264),
    ];
    for &(x0, y0, x1, y1) in &doors {
        c.fill(x0, y0, x1, y1, false);
    }
    c.finish()
}

pub fn maze() -> Environment {
    maze_with(MAZE_CELLS, MAZE_WALL, MAZE_SEED)
}

/// Perfect maze on an `n`×`n` lattice with walls `t` pixels thick.
pub fn maze_with(n: usize, t: usize, seed: u64) -> Environment {
    let pitch = SIZE / n;
    let mut c = Canvas::new();
    // start fully walled, then carve cells and passages
    c.fill(0, 0, SIZE, SIZE, true);
    let cell = |i: usize| (i * pitch + t / 2, (i + 1) * pitch - t / 2);
    for j in 0..n {
        for i in 0..n {
            let (x0, x1) = cell(i);
            let (y0, y1) = cell(j);
            c.fill(x0, y0, x1, y1, false);
        }
    }
    let mut r = rng::stream(seed, 0);
    let mut visited = vec![false; n * n];
    let mut stack = vec![0usize];
    visited[0] = true;
    while let Some(&cur) = stack.last() {
        let (ci, cj) = (cur % n, cur / n);
        let mut options = Vec::with_capacity(4);
        if ci > 0 && !visited[cur - 1] {
            options.push(cur - 1);
        }
        if ci + 1 < n && !visited[cur + 1] {
            options.push(cur + 1);
        }
        if cj > 0 && !visited[cur - n] {
            options.push(cur - n);
        }
        if cj + 1 < n && !visited[cur + n] {
            options.push(cur + n);
        }
        if options.is_empty() {
            stack.pop();
            continue;
        }
        let next = options[r.random_range(0..options.len())];
        let (ni, nj) = (next % n, next / n);
        let (x0, x1) = cell(ci.min(ni));
        let (y0, y1) = cell(cj.min(nj));
        if ni != ci {
            let (_, x_far) = cell(ci.max(ni));
            c.fill(x0, y0, x_far, y1, false);
        } else {
            let (_, y_far) = cell(cj.max(nj));
            c.fill(x0, y0, x1, y_far, false);
        }
        visited[next] = true;
        stack.push(next);
    }
    c.finish()
}

pub fn clutter() -> Environment {
    clutter_with(CLUTTER_OCCUPANCY, CLUTTER_SIDES, CLUTTER_SEED)
}

/// Random axis-aligned squares with side in `sides` until `occupancy` of
/// the map is covered, keeping the canonical start and goal clear. Layouts
/// are redrawn until start and goal connect through gaps at least
/// `2 * CLUTTER_CLEARANCE + 1` pixels wide.
pub fn clutter_with(occupancy: f64, sides: (usize, usize), seed: u64) -> Environment {
    let (start, goal) = canonical_pair("clutter").expect("clutter has a canonical pair");
    for attempt in 0.. {
        let c = scatter(occupancy, sides, seed, attempt);
        if c.dilated(CLUTTER_CLEARANCE).finish().grid_connected(&start, &goal) {
            return c.finish();
        }
    }
    unreachable!()
}

fn scatter(occupancy: f64, sides: (usize, usize), seed: u64, attempt: u64) -> Canvas {
    let mut c = Canvas::new();
    let mut r = rng::stream(seed, attempt);
    let target = (occupancy * (SIZE * SIZE) as f64) as usize;
    let keep_clear = |x: usize, y: usize| {
        let near = |px: f64, py: f64| {
            let (dx, dy) = (x as f64 + 0.5 - px, y as f64 + 0.5 - py);
            dx * dx + dy * dy < 12.0 * 12.0
        };
        near(15.0, 15.0) || near(385.0, 385.0)
    };
    let mut filled = 0;
    while filled < target {
        let s = r.random_range(sides.0..=sides.1);
        let x0 = r.random_range(0..SIZE);
        let y0 = r.random_range(0..SIZE);
        for y in y0..(y0 + s).min(SIZE) {
            for x in x0..(x0 + s).min(SIZE) {
                let idx = y * SIZE + x;
                if !c.occ[idx] && !keep_clear(x, y) {
                    c.occ[idx] = true;
                    filled += 1;
                }
            }
        }
    }
    c
}

/// Upper bound on how many points pairwise farther apart than `epsilon`
/// fit in C_free: the number of grid boxes with edge `epsilon / max(2, sqrt d)`
/// that touch a free cell (each box has diameter below `epsilon`, so it can
/// hold at most one such point).
pub fn packing_bound(env: &Environment, epsilon: f64) -> usize {
    let d = env.dim();
    let edge = epsilon / (d as f64).sqrt().max(2.0);
    let boxes: Vec<usize> = (0..d)
        .map(|i| ((env.upper()[i] - env.lower()[i]) / edge).ceil() as usize)
        .collect();
    let mut touched = std::collections::HashSet::new();
    for (idx, &occ) in env.occupancy().iter().enumerate() {
        if occ {
            continue;
        }
        let cell = env.cell_of_index(idx);
        let lo = env.cell_origin(&cell);
        // every box overlapping this free cell
        let ranges: Vec<(usize, usize)> = (0..d)
            .map(|i| {
                let a = ((lo[i] - env.lower()[i]) / edge).floor() as usize;
                let hi = lo[i] + env.cell_size()[i];
                let b = (((hi - env.lower()[i]) / edge).ceil() as usize).min(boxes[i]);
                (a, b.max(a + 1))
            })
            .collect();
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            touched.insert(cur.clone());
            for i in 0..d {
                cur[i] += 1;
                if cur[i] < ranges[i].1 {
                    continue 'outer;
                }
                cur[i] = ranges[i].0;
            }
            break;
        }
    }
    touched.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_maps_are_connected_between_canonical_pairs() {
        for name in BUNDLED_NAMES {
            let env = bundled(name).unwrap();
            let (s, g) = canonical_pair(name).unwrap();
            assert!(env.point_free(&s) && env.point_free(&g), "{name}");
            assert!(env.grid_connected(&s, &g), "{name}");
        }
    }

    #[test]
    fn clutter_occupancy_is_near_target() {
        let env = clutter();
        let occ = 1.0 - env.free_fraction();
        assert!((occ - CLUTTER_OCCUPANCY).abs() < 0.01, "{occ}");
    }

    #[test]
    fn maps_are_deterministic() {
        assert_eq!(maze().occupancy(), maze().occupancy());
        assert_eq!(clutter().occupancy(), clutter().occupancy());
    }

    #[test]
    fn packing_bound_on_empty_square() {
        let env = Environment::empty(&[100, 100]);
        assert_eq!(packing_bound(&env, 10.0), 400);
    }
}
