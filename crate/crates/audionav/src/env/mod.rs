//! Discrete grid world: occupancy, navigability, episode lifecycle, and
//! geodesic oracles.
//!
//! Coordinates are cell indices `(x, y)` with `x` growing east and `y`
//! growing north; a cell's center in meters is `((x + 0.5), (y + 0.5)) *
//! cell_size`. Motion is 4-connected with 90-degree turns.

mod episode;
mod geodesic;
mod grid;
mod maze;

pub use episode::{step, Action, AgentPose, EpisodeState, MAX_EPISODE_STEPS};
pub use geodesic::{
    geodesic_distance, sample_episode, shortest_action_count, DistanceField,
};
pub use grid::{Cell, GridEnvironment, Heading};
pub use maze::generate_maze;
