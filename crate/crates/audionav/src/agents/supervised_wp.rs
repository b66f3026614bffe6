use super::goal_predictor::{agent_frame_offset, dataset_spectrogram, snap_to_known_free};
use super::nets::{stack_batch, train_regression, ConvStack, SupervisedTrainConfig};
use crate::audio::{RirConfig, SourceLibrary};
use crate::env::{sample_episode, AgentPose, Cell, DistanceField, GridEnvironment};
use crate::mapping::{local_occupancy_from_scan, simulate_scan, GeometricMap, ScanConfig};
use crate::nn::{Array, Linear, ParameterSet};
use crate::policy::Waypoint;
use crate::seed::{self, Domain};
use crate::sim::{AgentView, Decision, NavAgent};
use crate::Result;

/// Field-of-view half width in meters (an 8 m x 8 m agent-centered square).
const FOV_HALF_M: f64 = 4.0;

/// Supervised waypoint regressor: geometric-map crop and spectrogram are
/// encoded separately and fused; the head predicts the agent-frame
/// displacement of the shortest path's exit through the FoV boundary.
#[derive(Debug, Clone)]
pub struct WaypointNet {
    geo_stack: ConvStack,
    spec_stack: ConvStack,
    fuse_geo: Linear,
    fuse_spec: Linear,
    head: Linear,
    pub geometric_crop: usize,
}

impl WaypointNet {
    pub fn init(params: &mut ParameterSet<f32>, seed: u64, geometric_crop: usize) -> Result<Self> {
        let mut rng = seed::rng(seed, Domain::ParamInit, 20);
        let geo_stack = ConvStack::init(
            params,
            &mut rng,
            "swp.geo",
            2,
            (geometric_crop, geometric_crop),
            8,
            [8, 4, 3],
            [4, 2, 1],
            [2, 1, 1],
            64,
        )?;
        let spec_stack = ConvStack::init(
            params,
            &mut rng,
            "swp.spec",
            2,
            (65, 26),
            8,
            [8, 4, 3],
            [4, 2, 1],
            [2, 1, 1],
            64,
        )?;
        // Mid-level fusion: summed projections are equivalent to a linear
        // layer over the concatenated features.
        let fuse_geo = Linear::init(params, &mut rng, "swp.fuse_geo", 64, 64, 1.0);
        let fuse_spec = Linear::init(params, &mut rng, "swp.fuse_spec", 64, 64, 1.0);
        let head = Linear::init(params, &mut rng, "swp.head", 64, 2, 1.0);
        Ok(WaypointNet { geo_stack, spec_stack, fuse_geo, fuse_spec, head, geometric_crop })
    }

    pub fn predict(
        &self,
        params: &ParameterSet<f32>,
        geo: &Array<f32>,
        spec: &Array<f32>,
    ) -> (f64, f64) {
        let g = self.geo_stack.infer(params, geo).map(|v| v.max(0.0));
        let s = self.spec_stack.infer(params, spec).map(|v| v.max(0.0));
        let fused = self
            .fuse_geo
            .infer(params, &g)
            .zip_map(&self.fuse_spec.infer(params, &s), |a, b| (a + b).max(0.0));
        let out = self.head.infer(params, &fused);
        (out.data()[0] as f64, out.data()[1] as f64)
    }
}

/// Ground-truth target: the last cell of a shortest path that still lies in
/// the agent-centered FoV square (the goal itself when it is inside).
pub fn fov_boundary_target(
    env: &GridEnvironment,
    goal_field: &DistanceField,
    pose: AgentPose,
) -> Cell {
    let half_cells = (FOV_HALF_M / env.cell_size()).round() as i32;
    let inside = |c: Cell| {
        (c.x - pose.cell.x).abs() <= half_cells && (c.y - pose.cell.y).abs() <= half_cells
    };
    let mut cur = pose.cell;
    let mut last_inside = cur;
    while let Some(next) = goal_field.first_step_toward_origin(env, cur) {
        if !inside(next) {
            break;
        }
        last_inside = next;
        cur = next;
        if cur == goal_field.origin() {
            break;
        }
    }
    last_inside
}

/// Train on simulator-generated pairs; the geometric input is the crop an
/// agent would see after scanning once from the sampled pose. Returns the
/// per-epoch loss curve.
#[allow(clippy::too_many_arguments)]
pub fn train_supervised_waypoints(
    envs: &[GridEnvironment],
    library: &SourceLibrary,
    source_name: &str,
    samples_per_env: usize,
    geometric_crop: usize,
    scan_cfg: &ScanConfig,
    rir_cfg: &RirConfig,
    cfg: &SupervisedTrainConfig,
) -> Result<(WaypointNet, ParameterSet<f32>, Vec<f64>)> {
    let mut params = ParameterSet::new(cfg.seed);
    let net = WaypointNet::init(&mut params, cfg.seed, geometric_crop)?;
    let wave = library.waveform(source_name)?;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (ei, env) in envs.iter().enumerate() {
        for k in 0..samples_per_env {
            let ep = seed::derive(cfg.seed, Domain::Dataset, 7 + (ei * samples_per_env + k) as u64);
            let (pose, goal) = sample_episode(env, ep);
            let field = DistanceField::from_origin(env, goal);
            let mut geo = GeometricMap::new(pose.cell, env.cell_size());
            geo.register(pose, &local_occupancy_from_scan(&simulate_scan(env, pose, scan_cfg)));
            let crop = geo
                .crop(pose, geometric_crop)
                .reshaped(&[1, 2, geometric_crop, geometric_crop]);
            let spec = dataset_spectrogram(env, &field, pose, &wave, rir_cfg, ep);
            let target_cell = fov_boundary_target(env, &field, pose);
            let (r, f) = agent_frame_offset(pose, target_cell);
            inputs.push(vec![crop, spec]);
            targets.push(vec![r as f32, f as f32]);
        }
    }
    let net2 = net.clone();
    let curve = train_regression(&mut params, &inputs, &targets, 2, cfg, move |g, gp, slots| {
        let geo = g.leaf(stack_batch(&slots[0].iter().collect::<Vec<_>>()), false);
        let spec = g.leaf(stack_batch(&slots[1].iter().collect::<Vec<_>>()), false);
        let gf = net2.geo_stack.forward(gp, geo).relu();
        let sf = net2.spec_stack.forward(gp, spec).relu();
        let fused = net2.fuse_geo.forward(gp, gf).add(net2.fuse_spec.forward(gp, sf)).relu();
        net2.head.forward(gp, fused)
    });
    Ok((net, params, curve))
}

/// Hierarchical baseline driving the trained waypoint regressor.
pub struct SupervisedWaypointsAgent {
    pub net: WaypointNet,
    pub params: ParameterSet<f32>,
    pub repredict_steps: usize,
}

impl NavAgent for SupervisedWaypointsAgent {
    fn name(&self) -> &str {
        "supervised-waypoints"
    }

    fn begin_episode(&mut self, _episode_seed: u64) {}

    fn decide(&mut self, view: &AgentView) -> Decision {
        let spec = view.spectrogram.as_ref().expect("supervised waypoints needs audio");
        let spec_arr = spec.data().reshaped(&[1, 2, spec.freq_bins, spec.time_frames]);
        let crop = view
            .geo
            .crop(view.pose, self.net.geometric_crop)
            .reshaped(&[1, 2, self.net.geometric_crop, self.net.geometric_crop]);
        let (right, fwd) = self.net.predict(&self.params, &crop, &spec_arr);
        let wp0 = Waypoint { dx: right.round() as i32, dy: fwd.round() as i32 };
        let target = snap_to_known_free(view.geo, wp0.world_cell(view.pose));
        let (gx, gy) = (target.x - view.pose.cell.x, target.y - view.pose.cell.y);
        let (fx, fy) = view.pose.heading.forward();
        let (rx, ry) = view.pose.heading.right();
        let wp = Waypoint { dx: gx * rx + gy * ry, dy: gx * fx + gy * fy };
        Decision::Waypoint {
            wp,
            value: None,
            masked_cells: 0,
            limit: Some(self.repredict_steps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_maze, Heading};

    #[test]
    fn goal_inside_fov_is_its_own_target() {
        let env = generate_maze(3, 10, 10, 0.0).unwrap();
        let pose = AgentPose::new(Cell::new(3, 3), Heading::North);
        let goal = Cell::new(5, 4); // well inside the 8 m square
        let field = DistanceField::from_origin(&env, goal);
        assert_eq!(fov_boundary_target(&env, &field, pose), goal);
    }

    #[test]
    fn distant_goal_targets_the_fov_boundary() {
        // Long corridor: the target is the last in-FoV path cell along it.
        let env = generate_maze(0, 24, 6, 0.0).unwrap();
        let pose = AgentPose::new(Cell::new(1, 2), Heading::East);
        let goal = Cell::new(22, 2);
        let field = DistanceField::from_origin(&env, goal);
        let target = fov_boundary_target(&env, &field, pose);
        // 4 m = 8 cells east of the agent, on the corridor ray.
        assert_eq!(target, Cell::new(9, 2));
    }
}
