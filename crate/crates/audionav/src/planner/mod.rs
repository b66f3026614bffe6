//! Inner navigation loop: Dijkstra on the partial map, analytic action
//! selection, and the planning loop with its break conditions.
//!
//! The plan graph is optimistic: unexplored cells count as traversable, so
//! the agent can commit to waypoints beyond the mapped frontier and learn
//! the truth by bumping into it.

mod dijkstra;
mod exec;

pub use dijkstra::{dijkstra, plan_graph_nodes, PlanGraph};
pub use exec::{next_action, run_planner_loop, PlanOutcome, PlanStatus, PlannerWorld};

/// Default cap on primitive actions per planning round.
pub const PLANNER_STEP_LIMIT: usize = 10;
