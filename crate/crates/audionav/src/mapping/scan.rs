use serde::{Deserialize, Serialize};

use super::MAP_RESOLUTION;
use crate::env::{AgentPose, GridEnvironment};
use crate::nn::Array;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanConfig {
    pub fov_deg: f64,
    pub max_range_m: f64,
    pub num_rays: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { fov_deg: 90.0, max_range_m: 3.0, num_rays: 121 }
    }
}

/// One wall hit: boundary-crossing distance plus the center of the struck
/// surface cell, both in the agent frame.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    pub distance: f64,
    /// (x_right, y_forward) of the hit cell's center in meters.
    pub cell_center: (f64, f64),
}

/// Egocentric planar range scan: per-ray angle (radians, counterclockwise
/// from straight ahead) and optional wall hit within range.
#[derive(Debug, Clone)]
pub struct RangeScan {
    pub angles: Vec<f64>,
    pub hits: Vec<Option<RayHit>>,
    pub max_range_m: f64,
    /// Environment grid pitch, used to reason about surface-cell extents.
    pub cell_size: f64,
}

/// Cast rays over the true occupancy grid from the agent's cell center.
/// Distances are exact cell-boundary crossings (grid traversal, not
/// sampling).
pub fn simulate_scan(env: &GridEnvironment, pose: AgentPose, cfg: &ScanConfig) -> RangeScan {
    let (ox, oy) = pose.cell.center_m(env.cell_size());
    let heading_angle = pose.heading.angle();
    let half = cfg.fov_deg.to_radians() / 2.0;
    let (fx, fy) = pose.heading.forward();
    let (rx, ry) = pose.heading.right();
    let mut angles = Vec::with_capacity(cfg.num_rays);
    let mut hits = Vec::with_capacity(cfg.num_rays);
    for i in 0..cfg.num_rays {
        let rel = -half + cfg.fov_deg.to_radians() * i as f64 / (cfg.num_rays - 1) as f64;
        let world = heading_angle + rel;
        angles.push(rel);
        let hit = cast_ray(env, ox, oy, world.cos(), world.sin(), cfg.max_range_m).map(
            |(t, cell)| {
                let (wx, wy) = cell.center_m(env.cell_size());
                let (dx, dy) = (wx - ox, wy - oy);
                RayHit {
                    distance: t,
                    cell_center: (
                        dx * rx as f64 + dy * ry as f64,
                        dx * fx as f64 + dy * fy as f64,
                    ),
                }
            },
        );
        hits.push(hit);
    }
    RangeScan { angles, hits, max_range_m: cfg.max_range_m, cell_size: env.cell_size() }
}

/// Amanatides-Woo traversal; returns the entry distance and the wall cell
/// the ray steps into, or None within `max_range`.
fn cast_ray(
    env: &GridEnvironment,
    ox: f64,
    oy: f64,
    dx: f64,
    dy: f64,
    max_range: f64,
) -> Option<(f64, crate::env::Cell)> {
    let cs = env.cell_size();
    let mut cx = (ox / cs).floor() as i32;
    let mut cy = (oy / cs).floor() as i32;
    let step_x = if dx > 0.0 { 1 } else { -1 };
    let step_y = if dy > 0.0 { 1 } else { -1 };
    let next_boundary = |c: i32, step: i32| -> f64 {
        if step > 0 {
            (c + 1) as f64 * cs
        } else {
            c as f64 * cs
        }
    };
    let mut t_max_x = if dx != 0.0 { (next_boundary(cx, step_x) - ox) / dx } else { f64::INFINITY };
    let mut t_max_y = if dy != 0.0 { (next_boundary(cy, step_y) - oy) / dy } else { f64::INFINITY };
    let t_delta_x = if dx != 0.0 { cs / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { cs / dy.abs() } else { f64::INFINITY };

    loop {
        let t = t_max_x.min(t_max_y);
        if t > max_range {
            return None;
        }
        if t_max_x <= t_max_y {
            cx += step_x;
            t_max_x += t_delta_x;
        } else {
            cy += step_y;
            t_max_y += t_delta_y;
        }
        let cell = crate::env::Cell::new(cx, cy);
        if !env.in_bounds(cell) {
            return None;
        }
        if env.is_wall(cell) {
            return Some((t, cell));
        }
    }
}

/// Two-channel (occupied, explored) egocentric patch covering 3x3 m in
/// front of the agent at 0.1 m/cell. The agent sits at the center of the
/// bottom-center cell; row 0 is the far edge. Occupied implies explored.
#[derive(Debug, Clone)]
pub struct LocalOccupancy {
    /// [2, rows, cols]; channel 0 occupied, channel 1 explored.
    pub grid: Array<f32>,
    pub rows: usize,
    pub cols: usize,
}

/// Patch side in cells (3 m at 0.1 m/cell).
pub const LOCAL_PATCH: usize = 30;
/// Free-space marking stride along each ray.
const MARCH_STEP: f64 = 0.05;

/// Backproject a range scan into the local patch: cells traversed by rays
/// are explored; for each wall hit, one cell provably interior to the
/// struck surface cell is marked occupied (grazing hits whose interior
/// never enters the patch are dropped rather than misplaced).
pub fn local_occupancy_from_scan(scan: &RangeScan) -> LocalOccupancy {
    let (rows, cols) = (LOCAL_PATCH, LOCAL_PATCH);
    let mut grid = Array::<f32>::zeros(&[2, rows, cols]);
    let plane = rows * cols;
    let half_res = MAP_RESOLUTION / 2.0;
    let index_of = |x_right: f64, y_fwd: f64| -> Option<usize> {
        let c = ((x_right + half_res) / MAP_RESOLUTION).floor() as i64 + (cols as i64 / 2);
        let r = rows as i64 - 1 - ((y_fwd + half_res) / MAP_RESOLUTION).floor() as i64;
        if r < 0 || r >= rows as i64 || c < 0 || c >= cols as i64 {
            None
        } else {
            Some((r as usize) * cols + c as usize)
        }
    };
    // A point at least this far from every environment-grid boundary keeps
    // its whole 0.1 m patch cell inside one environment cell.
    let safely_interior = |v: f64| -> bool {
        let f = (v + scan.cell_size / 2.0).rem_euclid(scan.cell_size);
        f > half_res + 1e-6 && f < scan.cell_size - half_res - 1e-6
    };

    for (angle, hit) in scan.angles.iter().zip(&scan.hits) {
        let (ux, uy) = (-angle.sin(), angle.cos());
        let free_until = hit.map_or(scan.max_range_m, |h| h.distance);
        let mut t = 0.0;
        while t < free_until.min(scan.max_range_m) {
            if let Some(i) = index_of(ux * t, uy * t) {
                grid.data_mut()[plane + i] = 1.0;
            }
            t += MARCH_STEP;
        }
        if let Some(h) = hit {
            // Walk from the surface-cell center toward the entry point and
            // take the first patch cell that is safely interior.
            let entry = (ux * h.distance, uy * h.distance);
            let (cxx, cyy) = h.cell_center;
            for k in 0..=5 {
                let a = k as f64 / 5.0 * 0.98;
                let q = (cxx + (entry.0 - cxx) * a, cyy + (entry.1 - cyy) * a);
                if safely_interior(q.0) && safely_interior(q.1) {
                    if let Some(i) = index_of(q.0, q.1) {
                        grid.data_mut()[i] = 1.0;
                        grid.data_mut()[plane + i] = 1.0;
                        break;
                    }
                }
            }
        }
    }
    LocalOccupancy { grid, rows, cols }
}

impl LocalOccupancy {
    pub fn occupied(&self, r: usize, c: usize) -> f32 {
        self.grid.data()[r * self.cols + c]
    }

    pub fn explored(&self, r: usize, c: usize) -> f32 {
        self.grid.data()[self.rows * self.cols + r * self.cols + c]
    }

    /// Agent-frame center (x_right, y_forward) in meters of a patch cell;
    /// the agent itself sits at the center of cell (rows-1, cols/2).
    pub fn cell_center(&self, r: usize, c: usize) -> (f64, f64) {
        let x = (c as f64 - (self.cols / 2) as f64) * MAP_RESOLUTION;
        let y = (self.rows as f64 - 1.0 - r as f64) * MAP_RESOLUTION;
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Cell, GridEnvironment, Heading};

    #[test]
    fn open_corridor_explores_without_occupancy() {
        let env = GridEnvironment::from_rows(
            &[
                "#########", "#.......#", "#.......#", "#.......#", "#.......#", "#.......#",
                "#.......#", "#.......#", "#########",
            ],
            0.5,
            Cell::new(4, 4),
            0,
        )
        .unwrap();
        let pose = AgentPose::new(Cell::new(4, 1), Heading::North);
        let scan = simulate_scan(&env, pose, &ScanConfig::default());
        let local = local_occupancy_from_scan(&scan);
        assert!(local.explored(15, 15) > 0.0, "center of patch explored");
        // The column straight ahead must be fully explored and free.
        for r in 0..local.rows {
            assert_eq!(local.occupied(r, 15), 0.0, "row {r}");
        }
    }

    #[test]
    fn wall_one_meter_ahead_appears_at_one_meter() {
        // Agent at y=1; wall row at y=3; face at 0.75 m from the agent's
        // cell center.
        let env = GridEnvironment::from_rows(
            &["#########", "#########", "#.......#", "#.......#", "#########"],
            0.5,
            Cell::new(4, 1),
            0,
        )
        .unwrap();
        let pose = AgentPose::new(Cell::new(4, 1), Heading::North);
        let scan = simulate_scan(&env, pose, &ScanConfig::default());
        let mid = scan.hits[scan.hits.len() / 2].expect("forward ray hits the wall");
        assert!((mid.distance - 0.75).abs() < 1e-9, "got {}", mid.distance);
        // Hit cell straight ahead: center 1.0 m forward (y=3 row).
        assert!((mid.cell_center.0 - 0.0).abs() < 1e-9);
        assert!((mid.cell_center.1 - 1.0).abs() < 1e-9);
        let local = local_occupancy_from_scan(&scan);
        // The occupied mark lies in the straight-ahead column, past the
        // face, inside the wall band (rows 17..=21 cover 0.75..1.25 m).
        let occupied_rows: Vec<usize> =
            (0..local.rows).filter(|&r| local.occupied(r, 15) > 0.0).collect();
        assert_eq!(occupied_rows.len(), 1);
        assert!((17..=21).contains(&occupied_rows[0]), "row {}", occupied_rows[0]);
        // Cells before the wall are explored free.
        for r in 23..30 {
            assert_eq!(local.occupied(r, 15), 0.0, "row {r}");
            assert_eq!(local.explored(r, 15), 1.0, "row {r}");
        }
        // Independent ray-cast oracle: sample the true grid densely.
        let (ox, oy) = pose.cell.center_m(env.cell_size());
        let mut oracle_hit = None;
        let mut t = 0.0;
        while t < 3.0 {
            let cy = ((oy + t) / 0.5).floor() as i32;
            if env.is_wall(Cell::new((ox / 0.5).floor() as i32, cy)) {
                oracle_hit = Some(t);
                break;
            }
            t += 1e-4;
        }
        assert!((oracle_hit.unwrap() - mid.distance).abs() < 1e-3);
    }

    #[test]
    fn occupied_implies_explored_everywhere() {
        let env = crate::env::generate_maze(9, 12, 12, 0.8).unwrap();
        for cell in env.free_cells() {
            for heading in [Heading::North, Heading::East, Heading::South, Heading::West] {
                let scan =
                    simulate_scan(&env, AgentPose::new(cell, heading), &ScanConfig::default());
                let local = local_occupancy_from_scan(&scan);
                for r in 0..local.rows {
                    for c in 0..local.cols {
                        if local.occupied(r, c) > 0.0 {
                            assert!(local.explored(r, c) > 0.0, "({r},{c})");
                        }
                    }
                }
            }
        }
    }
}
