//! Waypoint-granularity PPO training loop.

use serde::{Deserialize, Serialize};

use super::{gae_advantages, normalize, ppo_update, PpoConfig, RewardConfig, RolloutBuffer, Transition};
use crate::agents::AvWanAgent;
use crate::audio::{SourceLibrary, Split};
use crate::env::{sample_episode, GridEnvironment};
use crate::mapping::ScanConfig;
use crate::nn::{AdamState, Array, ParameterSet};
use crate::policy::{mask_action_map, occupancy_mask, sample_waypoint, AvWanModel, ModelConfig};
use crate::rl::waypoint_reward;
use crate::seed::{self, Domain};
use crate::sim::{
    run_episode, AudioSceneConfig, DriverConfig, EpisodeSetup, EpisodeSim, StopRule,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_waypoint_steps: usize,
    /// Update window in waypoint prediction steps.
    pub rollout_len: usize,
    pub ppo: PpoConfig,
    pub model: ModelConfig,
    pub reward: RewardConfig,
    pub audio: AudioSceneConfig,
    pub planner_limit: usize,
    /// Fixed source for heard-sound training; None samples train-split
    /// sources per episode (unheard protocol).
    pub heard_source: Option<String>,
    /// Validation evaluation cadence in updates (0 disables).
    pub eval_every_updates: usize,
    pub eval_episodes: usize,
    /// Checkpoint cadence in updates (0 keeps only start/end).
    pub checkpoint_every_updates: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_waypoint_steps: 40_000,
            rollout_len: 150,
            ppo: PpoConfig::default(),
            model: ModelConfig::desk(),
            reward: RewardConfig::default(),
            audio: AudioSceneConfig::default(),
            planner_limit: crate::planner::PLANNER_STEP_LIMIT,
            heard_source: Some(crate::audio::HEARD_SOURCE.to_string()),
            eval_every_updates: 50,
            eval_episodes: 16,
            checkpoint_every_updates: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningCurvePoint {
    pub update: usize,
    pub waypoint_steps: usize,
    /// Mean return of episodes finished within the last window.
    pub mean_return: f64,
    /// Mean success of episodes finished within the last window.
    pub train_sr: f64,
    pub val_sr: Option<f64>,
    pub val_spl: Option<f64>,
}

pub struct TrainOutput {
    pub params: ParameterSet<f32>,
    pub curve: Vec<LearningCurvePoint>,
    pub waypoint_steps: usize,
    pub updates: usize,
}

/// Stream of training episodes, cycling the train environments with fresh
/// start/goal/source draws.
struct EpisodeStream<'a> {
    envs: &'a [GridEnvironment],
    library: &'a SourceLibrary,
    heard: Option<String>,
    seed: u64,
    counter: u64,
}

impl EpisodeStream<'_> {
    fn next_setup(&mut self) -> (usize, EpisodeSetup) {
        let idx = (self.counter % self.envs.len() as u64) as usize;
        let episode_seed = seed::derive(self.seed, Domain::EpisodeSampling, self.counter);
        self.counter += 1;
        let (start, goal) = sample_episode(&self.envs[idx], episode_seed);
        let source_name = match &self.heard {
            Some(name) => name.clone(),
            None => {
                let names = self.library.names_in(Split::Train);
                names[(seed::derive(episode_seed, Domain::Dataset, 1) as usize) % names.len()]
                    .to_string()
            }
        };
        (idx, EpisodeSetup { start, goal, episode_seed, source_name, distractor: None })
    }
}

/// Single-worker PPO training. Deterministic per seed: two runs with the
/// same inputs produce identical parameters and curves.
pub fn train(
    train_envs: &[GridEnvironment],
    val_envs: &[GridEnvironment],
    library: &SourceLibrary,
    cfg: &TrainConfig,
    mut on_checkpoint: impl FnMut(usize, &ParameterSet<f32>) -> Result<()>,
) -> Result<TrainOutput> {
    if train_envs.is_empty() {
        return Err(Error::Config("no training environments".into()));
    }
    let (model, mut params) = AvWanModel::new(cfg.model.clone(), cfg.seed)?;
    let mut opt = AdamState::new(&params);
    let mut stream = EpisodeStream {
        envs: train_envs,
        library,
        heard: cfg.heard_source.clone(),
        seed: cfg.seed,
        counter: 0,
    };
    let mut policy_rng = seed::rng(cfg.seed, Domain::PolicySampling, u64::MAX);
    let scan_cfg = ScanConfig::default();

    on_checkpoint(0, &params)?;
    let mut curve = Vec::new();
    let mut waypoint_steps = 0usize;
    let mut updates = 0usize;

    // Live episode state (rebuilt whenever an episode ends).
    let (mut env_idx, mut setup) = stream.next_setup();
    let mut sim = EpisodeSim::new(
        &train_envs[env_idx],
        library,
        setup.clone(),
        cfg.audio,
        scan_cfg,
        StopRule::PolicyOnly,
        cfg.reward,
    )?;
    let mut hidden: Array<f32> = model.zero_hidden();
    let mut finished_returns: Vec<(f64, bool)> = Vec::new();

    while waypoint_steps < cfg.total_waypoint_steps {
        let mut buffer = RolloutBuffer::new(cfg.rollout_len);
        while !buffer.is_full() && waypoint_steps < cfg.total_waypoint_steps {
            if sim.state.done {
                finished_returns.push((sim.total_reward, sim.state.success));
                (env_idx, setup) = stream.next_setup();
                sim = EpisodeSim::new(
                    &train_envs[env_idx],
                    library,
                    setup.clone(),
                    cfg.audio,
                    scan_cfg,
                    StopRule::PolicyOnly,
                    cfg.reward,
                )?;
                hidden = model.zero_hidden();
            }
            let obs = sim.observation(cfg.model.geometric_crop, cfg.model.acoustic_crop)?;
            let (logits, value, next_hidden) = model.predict(&params, &obs, &hidden);
            let mask = occupancy_mask(&sim.geo, sim.state.pose, cfg.model.action_map_size);
            let amap = mask_action_map(logits.data(), &mask, cfg.model.action_map_size);
            let wp = sample_waypoint(&amap, &mut policy_rng);
            let action_index = wp.index(cfg.model.action_map_size);
            sim.push_waypoint_decision(wp, Some(value), amap.masked_count());
            let reward = if wp.is_stop() {
                sim.apply_action(crate::env::Action::Stop)
            } else {
                let target = wp.world_cell(sim.state.pose);
                let outcome =
                    crate::planner::run_planner_loop(&mut sim, target, cfg.planner_limit);
                waypoint_reward(&outcome)
            };
            buffer.push(Transition {
                obs,
                mask,
                hidden_in: hidden.clone(),
                action_index,
                log_prob: amap.probs[action_index].ln(),
                value: value as f64,
                reward,
                done: sim.state.done,
            });
            hidden = next_hidden;
            waypoint_steps += 1;
        }
        if buffer.is_empty() {
            break;
        }
        // Bootstrap the value of the observation after the window.
        let last_value = if sim.state.done {
            0.0
        } else {
            let obs = sim.observation(cfg.model.geometric_crop, cfg.model.acoustic_crop)?;
            model.predict(&params, &obs, &hidden).1 as f64
        };
        ppo_update(&model, &mut params, &mut opt, &buffer, last_value, &cfg.ppo)?;
        updates += 1;

        let window: Vec<(f64, bool)> =
            finished_returns.iter().rev().take(30).cloned().collect();
        let (mean_return, train_sr) = if window.is_empty() {
            (0.0, 0.0)
        } else {
            (
                window.iter().map(|(r, _)| r).sum::<f64>() / window.len() as f64,
                window.iter().filter(|(_, s)| *s).count() as f64 / window.len() as f64,
            )
        };
        let mut point = LearningCurvePoint {
            update: updates,
            waypoint_steps,
            mean_return,
            train_sr,
            val_sr: None,
            val_spl: None,
        };
        if cfg.eval_every_updates > 0 && updates % cfg.eval_every_updates == 0 && !val_envs.is_empty()
        {
            let (sr, spl) = evaluate_validation(&model, &params, val_envs, library, cfg)?;
            point.val_sr = Some(sr);
            point.val_spl = Some(spl);
        }
        curve.push(point);
        if cfg.checkpoint_every_updates > 0 && updates % cfg.checkpoint_every_updates == 0 {
            on_checkpoint(updates, &params)?;
        }
    }
    on_checkpoint(updates, &params)?;
    Ok(TrainOutput { params, curve, waypoint_steps, updates })
}

fn clone_model(model_cfg: &ModelConfig, params: &ParameterSet<f32>) -> Result<AvWanModel> {
    // Rebuild the layer skeleton; parameters are the live ones.
    let (model, _) = AvWanModel::new(model_cfg.clone(), params.seed())?;
    Ok(model)
}

fn evaluate_validation(
    model: &AvWanModel,
    params: &ParameterSet<f32>,
    val_envs: &[GridEnvironment],
    library: &SourceLibrary,
    cfg: &TrainConfig,
) -> Result<(f64, f64)> {
    let eval_model = clone_model(&model.config, params)?;
    let mut agent = AvWanAgent::new(eval_model, params.clone(), cfg.seed ^ 0xe7a1);
    let mut records = Vec::new();
    for k in 0..cfg.eval_episodes {
        let env = &val_envs[k % val_envs.len()];
        let episode_seed = seed::derive(cfg.seed ^ 0xe7a1, Domain::EpisodeSampling, k as u64);
        let (start, goal) = sample_episode(env, episode_seed);
        let source_name = match &cfg.heard_source {
            Some(name) => name.clone(),
            None => {
                let names = library.names_in(Split::Val);
                names[(episode_seed as usize) % names.len()].to_string()
            }
        };
        let setup = EpisodeSetup { start, goal, episode_seed, source_name, distractor: None };
        let mut sim = EpisodeSim::new(
            env,
            library,
            setup,
            cfg.audio,
            ScanConfig::default(),
            StopRule::PolicyOnly,
            cfg.reward,
        )?;
        let driver = DriverConfig {
            planner_limit: cfg.planner_limit,
            geometric_crop: cfg.model.geometric_crop,
            acoustic_crop: cfg.model.acoustic_crop,
            doa: crate::sim::DoaMode::Off,
            record_log: false,
        };
        let (record, _) = run_episode(&mut sim, &mut agent, &driver)?;
        records.push(record);
    }
    Ok((crate::metrics::sr(&records)?, crate::metrics::spl(&records)?))
}

/// Convenience wrapper for tests: GAE and normalization on a buffer.
pub fn window_advantages(
    buffer: &RolloutBuffer,
    last_value: f64,
    cfg: &PpoConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let transitions = buffer.transitions();
    let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = transitions.iter().map(|t| t.value).collect();
    let dones: Vec<bool> = transitions.iter().map(|t| t.done).collect();
    let (adv, ret) =
        gae_advantages(&rewards, &values, &dones, last_value, cfg.discount, cfg.gae_lambda)?;
    Ok((normalize(&adv), ret))
}
