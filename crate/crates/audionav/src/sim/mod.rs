//! Episode driver: wires the grid world, acoustics, maps, planner, and an
//! agent into one replayable episode loop.
//!
//! Agents see the world only through [`AgentView`] (their own maps plus the
//! current audio features); ground truth stays inside the simulator. All
//! randomness is drawn from streams derived from (env seed, episode seed),
//! so identical inputs replay bit-exact traces.

mod episode;
mod log;
mod run;

pub use episode::{AudioSceneConfig, DistractorSetup, EpisodeSetup, EpisodeSim, StopRule};
pub use log::{replay_log, RleGrid, StepRecord, TrajectoryLog, WaypointRecord};
pub use run::{run_episode, AgentView, Decision, DoaMode, DriverConfig, NavAgent};
