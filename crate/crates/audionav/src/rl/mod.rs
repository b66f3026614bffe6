//! Reward accounting, rollout storage, advantage estimation, and PPO.

mod gae;
mod ppo;
mod reward;
mod rollout;
pub mod trainer;

pub use gae::{gae_advantages, normalize};
pub use ppo::{ppo_update, PpoConfig, PpoStats};
pub use reward::{step_reward, waypoint_reward, RewardConfig};
pub use rollout::{RolloutBuffer, Transition};
pub use trainer::{train, LearningCurvePoint, TrainConfig, TrainOutput};
