//! Audio-visual navigation sandbox.
//!
//! A self-contained grid-world simulator in which an agent hears a binaural
//! sound source in an unmapped maze, builds geometric and acoustic maps from
//! egocentric observations, and navigates to the source. The crate bundles:
//!
//! - [`env`]: the discrete grid world, episode lifecycle, and geodesic
//!   oracles,
//! - [`audio`]: synthetic room impulse responses, binaural rendering,
//!   spectrograms, and a procedural source library,
//! - [`mapping`]: occupancy and acoustic-memory maps with egocentric crops
//!   and frontier extraction,
//! - [`nn`]: a minimal dense-tensor reverse-mode autodiff library with the
//!   layers needed by the policy (conv2d, linear, GRU, masked softmax) and
//!   an Adam optimizer,
//! - [`policy`]: the waypoint actor-critic (three CNN encoders, GRU fusion,
//!   occupancy-masked 9x9 action map),
//! - [`planner`]: Dijkstra planning on the partial map plus the inner
//!   planning loop,
//! - [`rl`]: reward accounting, GAE, and PPO training,
//! - [`agents`]: the waypoint agent and the comparison baselines behind one
//!   driver interface,
//! - [`sim`]: the episode driver tying environment, audio, maps, and agents
//!   together, with replayable trajectory logs,
//! - [`metrics`]: SR/SPL/SNA, waypoint-distance profiles, and reports,
//! - [`io`]: run configs, file formats, and rendering,
//! - [`commands`]: the operations behind the `audionav` CLI verbs.
//!
//! Start with the runnable examples (`cargo run --example generate_world`,
//! `listen`, `build_maps`, `plan_to_waypoint`, `autodiff_basics`,
//! `train_waypoints`, `evaluate_baselines`, `replay_trajectory`).

pub mod agents;
pub mod audio;
pub mod commands;
pub mod env;
pub mod io;
pub mod mapping;
pub mod metrics;
pub mod nn;
pub mod planner;
pub mod policy;
pub mod rl;
pub mod seed;
pub mod sim;

mod error;

pub use error::{Error, Result};
