//! The waypoint agent and the comparison baselines, all behind the shared
//! [`crate::sim::NavAgent`] interface so one driver and one metrics suite
//! evaluate everything.

mod avwan;
mod direction;
mod frontier;
mod goal_predictor;
mod nets;
mod random;
mod stop;
mod supervised_wp;

pub use avwan::AvWanAgent;
pub use direction::DirectionFollower;
pub use frontier::FrontierWaypoints;
pub use goal_predictor::{train_goal_predictor, GoalPredictorAgent, GoalPredictorNet};
pub use nets::{train_doa_classifier, DoaClassifier, RegressionNet, SupervisedTrainConfig};
pub use random::RandomAgent;
pub use stop::calibrate_stop_threshold;
pub use supervised_wp::{train_supervised_waypoints, SupervisedWaypointsAgent, WaypointNet};
