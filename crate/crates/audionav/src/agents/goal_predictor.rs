use rand::Rng;

use super::nets::{stack_batch, train_regression, ConvStack, SupervisedTrainConfig};
use crate::audio::{render_audio, spectrogram, synthesize_rir_with_field, RirConfig, SourceLibrary};
use crate::env::{sample_episode, AgentPose, Cell, DistanceField, GridEnvironment};
use crate::mapping::{CellKnowledge, GeometricMap};
use crate::nn::{Array, ParameterSet};
use crate::policy::Waypoint;
use crate::seed::{self, Domain};
use crate::sim::{AgentView, Decision, NavAgent};
use crate::Result;

/// Spectrogram-only goal regressor: predicts the agent-frame offset
/// (right, forward) of the audio goal in cells.
#[derive(Debug, Clone)]
pub struct GoalPredictorNet {
    pub stack: ConvStack,
}

impl GoalPredictorNet {
    pub fn init(params: &mut ParameterSet<f32>, seed: u64) -> Result<Self> {
        let mut rng = seed::rng(seed, Domain::ParamInit, 10);
        Ok(GoalPredictorNet {
            stack: ConvStack::init(
                params,
                &mut rng,
                "goal_net",
                2,
                (65, 26),
                8,
                [8, 4, 3],
                [4, 2, 1],
                [2, 1, 1],
                2,
            )?,
        })
    }

    /// Agent-frame (right, forward) offset in cells.
    pub fn predict(&self, params: &ParameterSet<f32>, spec: &Array<f32>) -> (f64, f64) {
        let out = self.stack.infer(params, spec);
        (out.data()[0] as f64, out.data()[1] as f64)
    }
}

/// Render one clean training spectrogram for a pose/goal pair.
pub(crate) fn dataset_spectrogram(
    env: &GridEnvironment,
    field: &DistanceField,
    pose: AgentPose,
    wave: &[f32],
    rir_cfg: &RirConfig,
    noise_seed: u64,
) -> Array<f32> {
    let rir = synthesize_rir_with_field(env, field, pose, rir_cfg);
    let audio = render_audio(&rir, wave, &[], 0.0, noise_seed).expect("dataset render");
    let spec = spectrogram(&audio);
    spec.data().reshaped(&[1, 2, spec.freq_bins, spec.time_frames])
}

/// World offset of `goal` from `pose`, expressed in the agent frame.
pub(crate) fn agent_frame_offset(pose: AgentPose, goal: Cell) -> (f64, f64) {
    let (gx, gy) = ((goal.x - pose.cell.x) as f64, (goal.y - pose.cell.y) as f64);
    let (fx, fy) = pose.heading.forward();
    let (rx, ry) = pose.heading.right();
    (gx * rx as f64 + gy * ry as f64, gx * fx as f64 + gy * fy as f64)
}

/// Supervised training on simulator-generated (spectrogram, offset) pairs.
/// Returns the trained parameters and the per-epoch loss curve.
pub fn train_goal_predictor(
    envs: &[GridEnvironment],
    library: &SourceLibrary,
    source_name: &str,
    samples_per_env: usize,
    rir_cfg: &RirConfig,
    cfg: &SupervisedTrainConfig,
) -> Result<(GoalPredictorNet, ParameterSet<f32>, Vec<f64>)> {
    let mut params = ParameterSet::new(cfg.seed);
    let net = GoalPredictorNet::init(&mut params, cfg.seed)?;
    let wave = library.waveform(source_name)?;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (ei, env) in envs.iter().enumerate() {
        for k in 0..samples_per_env {
            let ep = seed::derive(cfg.seed, Domain::Dataset, (ei * samples_per_env + k) as u64);
            let (pose, goal) = sample_episode(env, ep);
            let field = DistanceField::from_origin(env, goal);
            inputs.push(vec![dataset_spectrogram(env, &field, pose, &wave, rir_cfg, ep)]);
            let (r, f) = agent_frame_offset(pose, goal);
            targets.push(vec![r as f32, f as f32]);
        }
    }
    let stack = net.stack.clone();
    let curve = train_regression(&mut params, &inputs, &targets, 2, cfg, move |g, gp, slots| {
        let x = g.leaf(stack_batch(&slots[0].iter().collect::<Vec<_>>()), false);
        stack.forward(gp, x)
    });
    Ok((net, params, curve))
}

/// Move a predicted cell onto the nearest cell not known to be occupied
/// (ring search over the partial map).
pub(crate) fn snap_to_known_free(geo: &GeometricMap, cell: Cell) -> Cell {
    if geo.env_cell_knowledge(cell) != CellKnowledge::Occupied {
        return cell;
    }
    for radius in 1i32..=6 {
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                if dx.abs().max(dy.abs()) != radius {
                    continue;
                }
                let c = cell.offset(dx, dy);
                if geo.env_cell_knowledge(c) != CellKnowledge::Occupied {
                    return c;
                }
            }
        }
    }
    cell
}

/// Gan-style agent: predict the goal location from the binaural spectrogram
/// alone and plan to it, re-predicting every `repredict_steps` actions.
pub struct GoalPredictorAgent {
    pub net: GoalPredictorNet,
    pub params: ParameterSet<f32>,
    pub repredict_steps: usize,
}

impl NavAgent for GoalPredictorAgent {
    fn name(&self) -> &str {
        "goal-predictor"
    }

    fn begin_episode(&mut self, _episode_seed: u64) {}

    fn decide(&mut self, view: &AgentView) -> Decision {
        let spec = view.spectrogram.as_ref().expect("goal predictor needs audio");
        let arr = spec.data().reshaped(&[1, 2, spec.freq_bins, spec.time_frames]);
        let (right, fwd) = self.net.predict(&self.params, &arr);
        let dx = right.round() as i32;
        let dy = fwd.round() as i32;
        let wp0 = Waypoint { dx, dy };
        let target = snap_to_known_free(view.geo, wp0.world_cell(view.pose));
        // Back to the agent frame after snapping.
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
