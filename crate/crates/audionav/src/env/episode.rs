use serde::{Deserialize, Serialize};

use super::grid::{Cell, GridEnvironment, Heading};

/// Hard episode cap in primitive actions.
pub const MAX_EPISODE_STEPS: u32 = 500;

/// The four primitive actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

/// Agent position and heading. The cell is always free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentPose {
    pub cell: Cell,
    pub heading: Heading,
}

impl AgentPose {
    pub fn new(cell: Cell, heading: Heading) -> Self {
        AgentPose { cell, heading }
    }
}

/// Mutable per-episode state, owned by exactly one driver.
#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub pose: AgentPose,
    pub goal: Cell,
    pub step_count: u32,
    pub done: bool,
    pub success: bool,
    pub executed_actions: Vec<Action>,
    pub visited_cells: Vec<Cell>,
}

impl EpisodeState {
    pub fn new(start: AgentPose, goal: Cell) -> Self {
        EpisodeState {
            pose: start,
            goal,
            step_count: 0,
            done: false,
            success: false,
            executed_actions: Vec::new(),
            visited_cells: vec![start.cell],
        }
    }

    /// Number of executed motion actions (everything but Stop).
    pub fn motion_action_count(&self) -> u32 {
        self.executed_actions
            .iter()
            .filter(|a| !matches!(a, Action::Stop))
            .count() as u32
    }

    /// Executed path length in meters (cell-to-cell moves only).
    pub fn path_length_m(&self, cell_size: f64) -> f64 {
        (self.visited_cells.len() as f64 - 1.0) * cell_size
    }
}

/// Execute one primitive action.
///
/// Turns rotate 90 degrees in place. MoveForward advances one cell when the
/// navigability edge exists, otherwise the pose is unchanged and the
/// returned flag is true. Stop ends the episode with success exactly when
/// the agent is at the goal. The episode also ends when the step budget is
/// exhausted.
///
/// Panics if called on a finished episode.
pub fn step(env: &GridEnvironment, state: &mut EpisodeState, action: Action) -> bool {
    assert!(!state.done, "step() called on a finished episode");
    let mut collided = false;
    match action {
        Action::TurnLeft => state.pose.heading = state.pose.heading.turned_left(),
        Action::TurnRight => state.pose.heading = state.pose.heading.turned_right(),
        Action::MoveForward => {
            let (dx, dy) = state.pose.heading.forward();
            let target = state.pose.cell.offset(dx, dy);
            if env.has_edge(state.pose.cell, target) {
                state.pose.cell = target;
                state.visited_cells.push(target);
            } else {
                collided = true;
            }
        }
        Action::Stop => {
            state.done = true;
            state.success = state.pose.cell == state.goal;
        }
    }
    state.executed_actions.push(action);
    state.step_count += 1;
    if state.step_count >= MAX_EPISODE_STEPS {
        state.done = true;
    }
    collided
}
