use serde::{Deserialize, Serialize};

use super::dijkstra::{dijkstra, PlanGraph};
use crate::env::{Action, AgentPose, Cell};

/// Why a planning round ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStatus {
    ReachedWaypoint,
    /// Dijkstra found no route; exactly one random motion action was taken.
    NoPath,
    StepLimit,
    /// The stop rule fired and Stop was executed.
    StoppedAtGoalClaim,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub status: PlanStatus,
    pub actions_executed: Vec<Action>,
    pub reward_accumulated: f64,
}

/// World interface the planning loop drives. The episode driver implements
/// this over the real simulator; tests use lightweight mocks.
pub trait PlannerWorld {
    fn agent_pose(&self) -> AgentPose;
    fn episode_done(&self) -> bool;
    /// Plan graph over the current (just-updated) geometric map.
    fn plan_graph(&self) -> PlanGraph;
    /// Execute one primitive action, update maps, return its reward.
    fn execute(&mut self, action: Action) -> f64;
    /// Uniform random non-Stop action from the episode's RNG stream.
    fn random_motion_action(&mut self) -> Action;
    /// Baseline stop rule, consulted after every primitive action.
    fn stop_requested(&mut self) -> bool {
        false
    }
}

/// Single low-level command toward the next path cell: MoveForward when
/// facing it, otherwise the one turn that reduces heading error (behind
/// resolves to TurnLeft).
pub fn next_action(next_cell: Cell, pose: AgentPose) -> Action {
    let (dx, dy) = (next_cell.x - pose.cell.x, next_cell.y - pose.cell.y);
    assert!(
        dx.abs() + dy.abs() == 1,
        "path cell {next_cell:?} is not adjacent to pose {pose:?}"
    );
    let (fx, fy) = pose.heading.forward();
    if (dx, dy) == (fx, fy) {
        return Action::MoveForward;
    }
    let (rx, ry) = pose.heading.right();
    if (dx, dy) == (rx, ry) {
        return Action::TurnRight;
    }
    // Left or behind: turning left makes progress either way.
    Action::TurnLeft
}

/// Inner planning loop: replan on the updated map and execute one action
/// per iteration until the waypoint cell is reached, Dijkstra reports no
/// path (one uniform-random motion action is executed before breaking), or
/// `limit` primitive actions have been executed. The stop rule can also end
/// the round by issuing Stop.
pub fn run_planner_loop(world: &mut dyn PlannerWorld, target: Cell, limit: usize) -> PlanOutcome {
    assert!(!world.episode_done(), "planner loop started on a finished episode");
    let mut outcome =
        PlanOutcome { status: PlanStatus::StepLimit, actions_executed: Vec::new(), reward_accumulated: 0.0 };
    loop {
        if world.agent_pose().cell == target {
            outcome.status = PlanStatus::ReachedWaypoint;
            return outcome;
        }
        if outcome.actions_executed.len() >= limit {
            outcome.status = PlanStatus::StepLimit;
            return outcome;
        }
        let pose = world.agent_pose();
        let graph = world.plan_graph();
        let action = match dijkstra(&graph, pose.cell, target) {
            None => {
                let a = world.random_motion_action();
                outcome.reward_accumulated += world.execute(a);
                outcome.actions_executed.push(a);
                outcome.status = PlanStatus::NoPath;
                return outcome;
            }
            Some(path) => next_action(path[0], pose),
        };
        outcome.reward_accumulated += world.execute(action);
        outcome.actions_executed.push(action);
        if !world.episode_done() && world.stop_requested() {
            outcome.reward_accumulated += world.execute(Action::Stop);
            outcome.actions_executed.push(Action::Stop);
            outcome.status = PlanStatus::StoppedAtGoalClaim;
            return outcome;
        }
        if world.episode_done() {
            outcome.status = PlanStatus::StepLimit;
            return outcome;
        }
    }
}
