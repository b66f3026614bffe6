use std::collections::VecDeque;

use rand::Rng;

use super::grid::{Cell, GridEnvironment, Heading, DIRS};
use super::episode::AgentPose;
use crate::seed::{self, Domain};

/// Breadth-first distance field over the navigability graph, in cells, from
/// a fixed origin. Shared by rewards, audio propagation, and metrics.
#[derive(Debug, Clone)]
pub struct DistanceField {
    origin: Cell,
    width: i32,
    dist: Vec<Option<u32>>,
}

impl DistanceField {
    pub fn from_origin(env: &GridEnvironment, origin: Cell) -> Self {
        assert!(env.is_free(origin), "distance field origin must be free");
        let mut dist = vec![None; (env.width() * env.height()) as usize];
        let idx = |c: Cell| (c.y * env.width() + c.x) as usize;
        dist[idx(origin)] = Some(0);
        let mut queue = VecDeque::from([origin]);
        while let Some(c) = queue.pop_front() {
            let d = dist[idx(c)].unwrap();
            for dir in DIRS {
                let (dx, dy) = dir.forward();
                let n = c.offset(dx, dy);
                if env.is_free(n) && dist[idx(n)].is_none() {
                    dist[idx(n)] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        DistanceField { origin, width: env.width(), dist }
    }

    pub fn origin(&self) -> Cell {
        self.origin
    }

    /// Distance in cells, None when unreachable (or a wall).
    pub fn cells_to(&self, c: Cell) -> Option<u32> {
        let idx = (c.y * self.width + c.x) as usize;
        self.dist.get(idx).copied().flatten()
    }

    pub fn meters_to(&self, c: Cell, cell_size: f64) -> Option<f64> {
        self.cells_to(c).map(|d| d as f64 * cell_size)
    }

    /// First edge of a shortest path from `from` toward the origin. Among
    /// the descending neighbors the one best aligned with the Euclidean
    /// direction to the origin wins (that is the path a wavefront would
    /// arrive along); exact ties fall back to N,E,S,W order. None when
    /// `from` is the origin or unreachable.
    pub fn first_step_toward_origin(&self, env: &GridEnvironment, from: Cell) -> Option<Cell> {
        let d = self.cells_to(from)?;
        if d == 0 {
            return None;
        }
        let (ex, ey) =
            ((self.origin.x - from.x) as f64, (self.origin.y - from.y) as f64);
        let norm = (ex * ex + ey * ey).sqrt();
        let mut best: Option<(f64, Cell)> = None;
        for dir in DIRS {
            let (dx, dy) = dir.forward();
            let n = from.offset(dx, dy);
            if env.is_free(n) && self.cells_to(n) == Some(d - 1) {
                let dot = (dx as f64 * ex + dy as f64 * ey) / norm;
                if best.map(|(b, _)| dot > b + 1e-12).unwrap_or(true) {
                    best = Some((dot, n));
                }
            }
        }
        Some(best.expect("BFS field always has a descending neighbor").1)
    }
}

/// Shortest-path length between two free cells in meters; None when
/// unreachable (impossible on validated environments, checked anyway).
pub fn geodesic_distance(env: &GridEnvironment, a: Cell, b: Cell) -> Option<f64> {
    assert!(env.is_free(a) && env.is_free(b), "geodesic endpoints must be free");
    DistanceField::from_origin(env, a).meters_to(b, env.cell_size())
}

/// Minimal number of primitive actions (turns count) from a pose to a goal
/// cell, ignoring Stop. None when unreachable.
pub fn shortest_action_count(env: &GridEnvironment, pose: AgentPose, goal: Cell) -> Option<u32> {
    assert!(env.is_free(goal), "goal must be free");
    let state_idx = |c: Cell, h: Heading| -> usize {
        let hi = match h {
            Heading::North => 0,
            Heading::East => 1,
            Heading::South => 2,
            Heading::West => 3,
        };
        ((c.y * env.width() + c.x) as usize) * 4 + hi
    };
    let mut dist = vec![u32::MAX; (env.width() * env.height()) as usize * 4];
    dist[state_idx(pose.cell, pose.heading)] = 0;
    let mut queue = VecDeque::from([(pose.cell, pose.heading)]);
    while let Some((c, h)) = queue.pop_front() {
        let d = dist[state_idx(c, h)];
        if c == goal {
            return Some(d);
        }
        let mut push = |c2: Cell, h2: Heading| {
            let i = state_idx(c2, h2);
            if dist[i] == u32::MAX {
                dist[i] = d + 1;
                queue.push_back((c2, h2));
            }
        };
        push(c, h.turned_left());
        push(c, h.turned_right());
        let (dx, dy) = h.forward();
        let fwd = c.offset(dx, dy);
        if env.has_edge(c, fwd) {
            push(fwd, h);
        }
    }
    None
}

/// Sample a start pose and a goal cell for one episode, uniformly over free
/// cells with start != goal. Deterministic in (env seed, episode seed).
pub fn sample_episode(env: &GridEnvironment, episode_seed: u64) -> (AgentPose, Cell) {
    let mut rng = seed::rng(
        seed::derive(env.seed(), Domain::EpisodeSampling, episode_seed),
        Domain::EpisodeSampling,
        0,
    );
    let free: Vec<Cell> = env.free_cells().collect();
    let goal = free[rng.gen_range(0..free.len())];
    let start = loop {
        let c = free[rng.gen_range(0..free.len())];
        if c != goal {
            break c;
        }
    };
    let heading = DIRS[rng.gen_range(0..4)];
    (AgentPose::new(start, heading), goal)
}
