use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::log::{StepRecord, WaypointRecord};
use crate::audio::{
    direct_intensity_of_mix, render_audio, spectrogram, synthesize_rir_with_field, BinauralAudio,
    ImpulseResponse, RirConfig, SourceLibrary, Spectrogram,
};
use crate::env::{
    geodesic_distance, shortest_action_count, step, Action, AgentPose, Cell, DistanceField,
    EpisodeState, GridEnvironment,
};
use crate::mapping::{
    local_occupancy_from_scan, simulate_scan, AcousticMap, GeometricMap, ScanConfig,
};
use crate::metrics::{EpisodeRecord, WaypointDecision};
use crate::planner::{PlanGraph, PlannerWorld};
use crate::policy::{StepObservation, Waypoint};
use crate::rl::{step_reward, RewardConfig};
use crate::seed::{self, Domain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AudioSceneConfig {
    pub mic_noise_sigma: f64,
    pub rir: RirConfig,
}

impl Default for AudioSceneConfig {
    fn default() -> Self {
        AudioSceneConfig { mic_noise_sigma: 0.0, rir: RirConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorSetup {
    pub cell: Cell,
    pub source_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSetup {
    pub start: AgentPose,
    pub goal: Cell,
    pub episode_seed: u64,
    pub source_name: String,
    pub distractor: Option<DistractorSetup>,
}

/// How an episode may end besides the policy's own Stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Only the agent's explicit Stop ends the episode (AV-WaN).
    PolicyOnly,
    /// Fires exactly at the goal cell (the Random baseline's contract).
    Oracle,
    /// Fires when direct intensity exceeds a calibrated threshold.
    IntensityThreshold(f64),
}

/// Live episode: true world state, agent-built maps, audio scene, reward
/// accounting, and the trajectory log.
pub struct EpisodeSim<'a> {
    pub env: &'a GridEnvironment,
    pub setup: EpisodeSetup,
    pub state: EpisodeState,
    pub geo: GeometricMap,
    pub aco: AcousticMap,
    pub stop_rule: StopRule,
    goal_field: DistanceField,
    distractor_field: Option<DistanceField>,
    source_wave: Vec<f32>,
    distractor_wave: Option<Vec<f32>>,
    scan_cfg: ScanConfig,
    audio_cfg: AudioSceneConfig,
    reward_cfg: RewardConfig,
    fallback_rng: ChaCha8Rng,
    noise_base: u64,
    shortest_length_m: f64,
    shortest_actions: u32,
    last_intensity: f64,
    pub total_reward: f64,
    pub step_log: Vec<StepRecord>,
    pub waypoint_log: Vec<WaypointRecord>,
}

impl<'a> EpisodeSim<'a> {
    pub fn new(
        env: &'a GridEnvironment,
        library: &SourceLibrary,
        setup: EpisodeSetup,
        audio_cfg: AudioSceneConfig,
        scan_cfg: ScanConfig,
        stop_rule: StopRule,
        reward_cfg: RewardConfig,
    ) -> Result<Self> {
        if !env.is_free(setup.start.cell) || !env.is_free(setup.goal) {
            return Err(Error::Config("episode start/goal must be free cells".into()));
        }
        let goal_field = DistanceField::from_origin(env, setup.goal);
        let source_wave = library.waveform(&setup.source_name)?;
        let (distractor_field, distractor_wave) = match &setup.distractor {
            Some(d) => {
                if !env.is_free(d.cell) {
                    return Err(Error::Config("distractor cell must be free".into()));
                }
                (
                    Some(DistanceField::from_origin(env, d.cell)),
                    Some(library.waveform(&d.source_name)?),
                )
            }
            None => (None, None),
        };
        let shortest_length_m = geodesic_distance(env, setup.start.cell, setup.goal)
            .ok_or_else(|| Error::Config("goal unreachable from start".into()))?;
        let shortest_actions = shortest_action_count(env, setup.start, setup.goal)
            .ok_or_else(|| Error::Config("goal unreachable from start".into()))?;
        let mut sim = EpisodeSim {
            env,
            state: EpisodeState::new(setup.start, setup.goal),
            geo: GeometricMap::new(setup.start.cell, env.cell_size()),
            aco: AcousticMap::new(setup.start.cell),
            stop_rule,
            goal_field,
            distractor_field,
            source_wave,
            distractor_wave,
            scan_cfg,
            audio_cfg,
            reward_cfg,
            fallback_rng: seed::rng(env.seed(), Domain::AgentFallback, setup.episode_seed),
            noise_base: seed::derive(env.seed(), Domain::MicNoise, setup.episode_seed),
            shortest_length_m,
            shortest_actions,
            last_intensity: 0.0,
            total_reward: 0.0,
            step_log: Vec::new(),
            waypoint_log: Vec::new(),
            setup,
        };
        sim.observe();
        Ok(sim)
    }

    /// Current observation index: one per primitive step, starting at 0
    /// before any action.
    fn obs_index(&self) -> u64 {
        self.state.step_count as u64
    }

    fn noise_seed(&self) -> u64 {
        seed::derive(self.noise_base, Domain::MicNoise, self.obs_index())
    }

    /// Impulse responses for the current pose. The intensity path uses
    /// direct-pulse prefixes, which match the full responses exactly over
    /// the 3 ms window's support.
    fn rirs(&self, prefix_for_intensity: bool) -> Vec<(ImpulseResponse, &[f32])> {
        let synth = |field: &DistanceField| {
            if prefix_for_intensity {
                crate::audio::synthesize_rir_direct_prefix(
                    self.env,
                    field,
                    self.state.pose,
                    &self.audio_cfg.rir,
                )
            } else {
                synthesize_rir_with_field(self.env, field, self.state.pose, &self.audio_cfg.rir)
            }
        };
        let mut out = vec![(synth(&self.goal_field), self.source_wave.as_slice())];
        if let (Some(field), Some(wave)) = (&self.distractor_field, &self.distractor_wave) {
            out.push((synth(field), wave.as_slice()));
        }
        out
    }

    /// Direct-sound intensity of the current observation (cheap path).
    pub fn current_intensity(&self) -> f64 {
        let rirs = self.rirs(true);
        let refs: Vec<(&ImpulseResponse, &[f32])> = rirs.iter().map(|(r, w)| (r, *w)).collect();
        direct_intensity_of_mix(&refs, self.audio_cfg.mic_noise_sigma, self.noise_seed())
    }

    /// Full binaural render of the current observation.
    pub fn current_audio(&self) -> Result<BinauralAudio> {
        let rirs = self.rirs(false);
        let distractors: Vec<(&ImpulseResponse, &[f32])> =
            rirs.iter().skip(1).map(|(r, w)| (r, *w)).collect();
        render_audio(
            &rirs[0].0,
            rirs[0].1,
            &distractors,
            self.audio_cfg.mic_noise_sigma,
            self.noise_seed(),
        )
    }

    pub fn current_spectrogram(&self) -> Result<Spectrogram> {
        Ok(spectrogram(&self.current_audio()?))
    }

    pub fn last_intensity(&self) -> f64 {
        self.last_intensity
    }

    pub fn mic_noise_sigma(&self) -> f64 {
        self.audio_cfg.mic_noise_sigma
    }

    /// Scan, register into the geometric map, and fold the current
    /// intensity into the acoustic memory at the agent's cell.
    fn observe(&mut self) {
        let scan = simulate_scan(self.env, self.state.pose, &self.scan_cfg);
        let local = local_occupancy_from_scan(&scan);
        self.geo.register(self.state.pose, &local);
        let intensity = self.current_intensity();
        self.aco.update(self.state.pose.cell, intensity);
        self.last_intensity = intensity;
    }

    fn goal_distance_m(&self, cell: Cell) -> f64 {
        self.goal_field
            .meters_to(cell, self.env.cell_size())
            .expect("free cells are connected on validated environments")
    }

    /// Execute one primitive action: env step, reward, map updates, log.
    pub fn apply_action(&mut self, action: Action) -> f64 {
        let prev = self.goal_distance_m(self.state.pose.cell);
        let collided = step(self.env, &mut self.state, action);
        let new = self.goal_distance_m(self.state.pose.cell);
        let success_now = self.state.done && self.state.success;
        let reward =
            step_reward(prev, new, self.env.cell_size(), success_now, &self.reward_cfg);
        self.total_reward += reward;
        if !self.state.done {
            self.observe();
        }
        self.step_log.push(StepRecord {
            action,
            pose_after: self.state.pose,
            reward,
            collided,
        });
        reward
    }

    /// Record one waypoint decision for metrics and logs.
    pub fn push_waypoint_decision(&mut self, wp: Waypoint, value: Option<f32>, masked_cells: usize) {
        self.waypoint_log.push(WaypointRecord {
            pose: self.state.pose,
            delta: (wp.dx, wp.dy),
            value,
            masked_cells,
            goal_distance_m: self.goal_distance_m(self.state.pose.cell),
            waypoint_length_m: wp.length_m(self.env.cell_size()),
        });
    }

    /// Encoder inputs for the current observation.
    pub fn observation(&self, geometric_crop: usize, acoustic_crop: usize) -> Result<StepObservation> {
        let geo = self.geo.crop(self.state.pose, geometric_crop);
        let spec = self.current_spectrogram()?;
        let aco = self.aco.crop(self.state.pose, acoustic_crop);
        Ok(StepObservation {
            geometric: geo.reshaped(&[1, 2, geometric_crop, geometric_crop]),
            spectrogram: spec
                .data()
                .reshaped(&[1, 2, spec.freq_bins, spec.time_frames]),
            acoustic: aco.reshaped(&[1, 1, acoustic_crop, acoustic_crop]),
        })
    }

    /// Evaluate the stop rule against the current observation.
    pub fn stop_now(&mut self) -> bool {
        match self.stop_rule {
            StopRule::PolicyOnly => false,
            StopRule::Oracle => self.state.pose.cell == self.state.goal,
            StopRule::IntensityThreshold(t) => self.last_intensity > t,
        }
    }

    /// Final per-episode record for the metrics suite.
    pub fn finish_record(&self) -> EpisodeRecord {
        EpisodeRecord {
            success: self.state.success,
            path_length_m: self.state.path_length_m(self.env.cell_size()),
            shortest_length_m: self.shortest_length_m,
            action_count: self.state.motion_action_count(),
            shortest_action_count: self.shortest_actions,
            waypoints: self
                .waypoint_log
                .iter()
                .map(|w| WaypointDecision {
                    goal_distance_m: w.goal_distance_m,
                    waypoint_length_m: w.waypoint_length_m,
                })
                .collect(),
        }
    }
}

impl PlannerWorld for EpisodeSim<'_> {
    fn agent_pose(&self) -> AgentPose {
        self.state.pose
    }

    fn episode_done(&self) -> bool {
        self.state.done
    }

    fn plan_graph(&self) -> PlanGraph {
        PlanGraph::from_map(&self.geo)
    }

    fn execute(&mut self, action: Action) -> f64 {
        self.apply_action(action)
    }

    fn random_motion_action(&mut self) -> Action {
        [Action::MoveForward, Action::TurnLeft, Action::TurnRight]
            [self.fallback_rng.gen_range(0..3)]
    }

    fn stop_requested(&mut self) -> bool {
        self.stop_now()
    }
}
