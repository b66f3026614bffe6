use serde::{Deserialize, Serialize};

use crate::planner::PlanOutcome;

/// Navigation reward constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub success_bonus: f64,
    /// Reward per cell of geodesic progress toward the goal (and the
    /// equivalent penalty for regress).
    pub geodesic_delta_coeff: f64,
    /// Charged per executed action.
    pub time_penalty: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig { success_bonus: 10.0, geodesic_delta_coeff: 0.25, time_penalty: 0.01 }
    }
}

/// Reward for one primitive action: geodesic progress (in cells) times the
/// coefficient, minus the time penalty, plus the success bonus when this
/// action ended the episode successfully.
pub fn step_reward(
    prev_dist_m: f64,
    new_dist_m: f64,
    cell_size: f64,
    success: bool,
    cfg: &RewardConfig,
) -> f64 {
    let progress_cells = (prev_dist_m - new_dist_m) / cell_size;
    let mut r = cfg.geodesic_delta_coeff * progress_cells - cfg.time_penalty;
    if success {
        r += cfg.success_bonus;
    }
    r
}

/// A waypoint prediction step earns the cumulative reward collected during
/// its planner round.
pub fn waypoint_reward(outcome: &PlanOutcome) -> f64 {
    outcome.reward_accumulated
}
