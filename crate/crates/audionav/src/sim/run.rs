use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::episode::EpisodeSim;
use super::log::{RleGrid, TrajectoryLog};
use crate::audio::{ground_truth_doa, Spectrogram};
use crate::env::{Action, AgentPose, DistanceField};
use crate::mapping::{AcousticMap, GeometricMap};
use crate::metrics::EpisodeRecord;
use crate::planner::run_planner_loop;
use crate::policy::Waypoint;
use crate::seed::{self, Domain};
use crate::Result;

/// How the driver supplies direction-of-arrival estimates to baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DoaMode {
    Off,
    /// First-path direction with zero-mean Gaussian angular noise (deg).
    Oracle { noise_sigma_deg: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriverConfig {
    pub planner_limit: usize,
    pub geometric_crop: usize,
    pub acoustic_crop: usize,
    pub doa: DoaMode,
    pub record_log: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            planner_limit: crate::planner::PLANNER_STEP_LIMIT,
            geometric_crop: 48,
            acoustic_crop: 20,
            doa: DoaMode::Off,
            record_log: false,
        }
    }
}

/// Everything an agent may observe when deciding.
pub struct AgentView<'s> {
    pub pose: AgentPose,
    pub step_count: u32,
    pub geo: &'s GeometricMap,
    pub aco: &'s AcousticMap,
    pub spectrogram: Option<Spectrogram>,
    pub intensity: f64,
    pub doa_bin: Option<usize>,
    /// Oracle arrival bit; only the Random baseline's stop contract uses it.
    pub at_goal: bool,
}

/// An agent's decision at one decision point.
#[derive(Debug, Clone, Copy)]
pub enum Decision {
    /// Execute exactly one primitive action.
    Primitive(Action),
    /// Hand a waypoint to the inner planning loop ((0,0) means Stop).
    Waypoint {
        wp: Waypoint,
        value: Option<f32>,
        masked_cells: usize,
        /// Planner-round action budget; None uses the driver default.
        limit: Option<usize>,
    },
}

/// Shared interface for the waypoint policy and every baseline.
pub trait NavAgent {
    fn name(&self) -> &str;
    fn begin_episode(&mut self, episode_seed: u64);
    /// Spectrogram rendering is the expensive part of a view; agents that
    /// ignore it can skip it.
    fn wants_spectrogram(&self) -> bool {
        true
    }
    fn decide(&mut self, view: &AgentView) -> Decision;
}

/// Drive one episode to completion.
pub fn run_episode(
    sim: &mut EpisodeSim,
    agent: &mut dyn NavAgent,
    cfg: &DriverConfig,
) -> Result<(EpisodeRecord, Option<TrajectoryLog>)> {
    agent.begin_episode(sim.setup.episode_seed);
    let mut doa_rng: ChaCha8Rng =
        seed::rng(sim.env.seed(), Domain::MicNoise, sim.setup.episode_seed ^ 0xd0a);
    let goal_field = DistanceField::from_origin(sim.env, sim.setup.goal);

    while !sim.state.done {
        let view = build_view(sim, agent.wants_spectrogram(), cfg, &goal_field, &mut doa_rng)?;
        match agent.decide(&view) {
            Decision::Primitive(action) => {
                sim.apply_action(action);
            }
            Decision::Waypoint { wp, value, masked_cells, limit } => {
                sim.push_waypoint_decision(wp, value, masked_cells);
                if wp.is_stop() {
                    sim.apply_action(Action::Stop);
                } else if sim.stop_now() {
                    // Stop rule already satisfied at the decision point.
                    sim.apply_action(Action::Stop);
                } else {
                    let target = wp.world_cell(sim.state.pose);
                    run_planner_loop(sim, target, limit.unwrap_or(cfg.planner_limit));
                }
            }
        }
    }

    let record = sim.finish_record();
    let log = if cfg.record_log {
        let (occ, exp) = sim.geo.rle_snapshot();
        Some(TrajectoryLog {
            agent: agent.name().to_string(),
            env_json: sim.env.to_json(),
            setup: sim.setup.clone(),
            mic_noise_sigma: sim.mic_noise_sigma(),
            steps: sim.step_log.clone(),
            waypoints: sim.waypoint_log.clone(),
            record: record.clone(),
            map_occupied: RleGrid { size: sim.geo.size(), runs: occ },
            map_explored: RleGrid { size: sim.geo.size(), runs: exp },
        })
    } else {
        None
    };
    Ok((record, log))
}

fn build_view<'s>(
    sim: &'s mut EpisodeSim,
    wants_spectrogram: bool,
    cfg: &DriverConfig,
    goal_field: &DistanceField,
    doa_rng: &mut ChaCha8Rng,
) -> Result<AgentView<'s>> {
    let spectrogram = if wants_spectrogram { Some(sim.current_spectrogram()?) } else { None };
    let doa_bin = match cfg.doa {
        DoaMode::Off => None,
        DoaMode::Oracle { noise_sigma_deg } => Some(ground_truth_doa(
            sim.env,
            goal_field,
            sim.state.pose,
            noise_sigma_deg,
            doa_rng,
        )?),
    };
    Ok(AgentView {
        pose: sim.state.pose,
        step_count: sim.state.step_count,
        intensity: sim.last_intensity(),
        at_goal: sim.state.pose.cell == sim.state.goal,
        doa_bin,
        spectrogram,
        geo: &sim.geo,
        aco: &sim.aco,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::default_library;
    use crate::env::{generate_maze, sample_episode, Cell};
    use crate::planner::PlanStatus;
    use crate::rl::RewardConfig;
    use crate::sim::episode::{AudioSceneConfig, EpisodeSetup, StopRule};
    use crate::sim::log::replay_log;
    use crate::sim::EpisodeSim;

    /// Oracle agent: walks the true shortest path via waypoints of at most
    /// 2 cells, stopping at the goal. Only for driver tests.
    struct OracleAgent {
        goal: Cell,
    }

    impl NavAgent for OracleAgent {
        fn name(&self) -> &str {
            "oracle"
        }
        fn begin_episode(&mut self, _seed: u64) {}
        fn wants_spectrogram(&self) -> bool {
            false
        }
        fn decide(&mut self, view: &AgentView) -> Decision {
            if view.at_goal {
                return Decision::Waypoint {
                    wp: Waypoint { dx: 0, dy: 0 },
                    value: None,
                    masked_cells: 0,
                    limit: None,
                };
            }
            // Direct the planner toward the goal in small hops by pointing
            // at the goal cell clamped into the action-map reach.
            let (gx, gy) = (self.goal.x - view.pose.cell.x, self.goal.y - view.pose.cell.y);
            // World delta -> agent frame (inverse of agent_to_world).
            let (fx, fy) = view.pose.heading.forward();
            let (rx, ry) = view.pose.heading.right();
            let dx = (gx * rx + gy * ry).clamp(-4, 4);
            let dy = (gx * fx + gy * fy).clamp(-4, 4);
            Decision::Waypoint {
                wp: Waypoint { dx, dy },
                value: None,
                masked_cells: 0,
                limit: None,
            }
        }
    }

    fn setup_sim<'a>(
        env: &'a GridEnvironment,
        seed: u64,
        stop: StopRule,
    ) -> (EpisodeSim<'a>, crate::audio::SourceLibrary) {
        let lib = default_library(16_000);
        let (start, goal) = sample_episode(env, seed);
        let setup = EpisodeSetup {
            start,
            goal,
            episode_seed: seed,
            source_name: "tone_0540".into(),
            distractor: None,
        };
        let sim = EpisodeSim::new(
            env,
            &lib,
            setup,
            AudioSceneConfig::default(),
            Default::default(),
            stop,
            RewardConfig::default(),
        )
        .unwrap();
        (sim, lib)
    }

    use crate::env::GridEnvironment;

    #[test]
    fn oracle_agent_reaches_goal_with_exact_reward_accounting() {
        let env = generate_maze(100, 12, 12, 0.6).unwrap();
        for seed in 0..5u64 {
            let (mut sim, _lib) = setup_sim(&env, seed, StopRule::PolicyOnly);
            let goal = sim.setup.goal;
            let start_dist = crate::env::geodesic_distance(&env, sim.setup.start.cell, goal)
                .unwrap();
            let mut agent = OracleAgent { goal };
            let cfg = DriverConfig { record_log: true, ..Default::default() };
            let (record, log) = run_episode(&mut sim, &mut agent, &cfg).unwrap();
            assert!(record.success, "seed {seed}");
            // Total return telescopes exactly.
            let total: f64 = sim.step_log.iter().map(|s| s.reward).sum();
            let net_cells = start_dist / env.cell_size();
            let expect = 10.0 + 0.25 * net_cells - 0.01 * sim.step_log.len() as f64;
            assert!(
                (total - expect).abs() < 1e-9,
                "seed {seed}: total {total} vs expected {expect}"
            );
            // Replay is pose-exact.
            replay_log(&log.unwrap()).unwrap();
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_traces() {
        let env = generate_maze(101, 12, 12, 0.5).unwrap();
        let run = || {
            let (mut sim, _lib) = setup_sim(&env, 3, StopRule::PolicyOnly);
            let mut agent = OracleAgent { goal: sim.setup.goal };
            let cfg = DriverConfig { record_log: true, ..Default::default() };
            let (_, log) = run_episode(&mut sim, &mut agent, &cfg).unwrap();
            log.unwrap().to_json_lines()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn tampered_log_fails_replay() {
        let env = generate_maze(102, 10, 10, 0.4).unwrap();
        let (mut sim, _lib) = setup_sim(&env, 1, StopRule::PolicyOnly);
        let mut agent = OracleAgent { goal: sim.setup.goal };
        let cfg = DriverConfig { record_log: true, ..Default::default() };
        let (_, log) = run_episode(&mut sim, &mut agent, &cfg).unwrap();
        let mut log = log.unwrap();
        replay_log(&log).unwrap();
        // Tamper with one action.
        let t = log.steps.len() / 2;
        log.steps[t].action = match log.steps[t].action {
            Action::MoveForward => Action::TurnLeft,
            _ => Action::MoveForward,
        };
        let err = replay_log(&log).unwrap_err();
        assert!(matches!(err, crate::Error::ReplayDivergence(_)));
    }

    #[test]
    fn log_json_lines_round_trip() {
        let env = generate_maze(103, 10, 10, 0.5).unwrap();
        let (mut sim, _lib) = setup_sim(&env, 2, StopRule::PolicyOnly);
        let mut agent = OracleAgent { goal: sim.setup.goal };
        let cfg = DriverConfig { record_log: true, ..Default::default() };
        let (_, log) = run_episode(&mut sim, &mut agent, &cfg).unwrap();
        let log = log.unwrap();
        let text = log.to_json_lines();
        let parsed = TrajectoryLog::from_json_lines(&text).unwrap();
        assert_eq!(parsed.to_json_lines(), text);
        replay_log(&parsed).unwrap();
    }

    #[test]
    fn oracle_stop_rule_fires_on_arrival() {
        // A forward-walking primitive agent with the Oracle stop rule
        // standing in for the Random baseline's stop contract.
        struct Walker;
        impl NavAgent for Walker {
            fn name(&self) -> &str {
                "walker"
            }
            fn begin_episode(&mut self, _seed: u64) {}
            fn wants_spectrogram(&self) -> bool {
                false
            }
            fn decide(&mut self, view: &AgentView) -> Decision {
                if view.at_goal {
                    Decision::Primitive(Action::Stop)
                } else {
                    Decision::Primitive(Action::MoveForward)
                }
            }
        }
        let env = generate_maze(104, 8, 8, 0.0).unwrap();
        let (mut sim, _lib) = setup_sim(&env, 7, StopRule::Oracle);
        let mut agent = Walker;
        let (record, _) = run_episode(&mut sim, &mut agent, &DriverConfig::default()).unwrap();
        // The walker stops only when it happens to hit the goal; either way
        // the episode terminated within the cap.
        assert!(sim.state.done);
        assert!(record.action_count <= crate::env::MAX_EPISODE_STEPS);
    }

    #[test]
    fn planner_world_replans_after_collision_reveals_wall() {
        // Construct a map where the shortest route in the unexplored map
        // goes through a wall; after bumping, the next plan avoids it.
        let env = GridEnvironment::from_rows(
            &["#######", "#..#..#", "#..#..#", "#.....#", "#######"],
            0.5,
            Cell::new(5, 3),
            9,
        )
        .unwrap();
        let lib = default_library(16_000);
        let setup = EpisodeSetup {
            start: crate::env::AgentPose::new(Cell::new(1, 3), crate::env::Heading::East),
            goal: Cell::new(5, 3),
            episode_seed: 0,
            source_name: "tone_0540".into(),
            distractor: None,
        };
        let mut sim = EpisodeSim::new(
            &env,
            &lib,
            setup,
            AudioSceneConfig::default(),
            Default::default(),
            StopRule::PolicyOnly,
            RewardConfig::default(),
        )
        .unwrap();
        let out = crate::planner::run_planner_loop(&mut sim, Cell::new(5, 3), 20);
        assert_eq!(out.status, PlanStatus::ReachedWaypoint);
        // The wall column at x=3 (rows 1..2) was never traversed.
        for w in sim.state.visited_cells.iter() {
            assert!(env.is_free(*w));
        }
    }
}
