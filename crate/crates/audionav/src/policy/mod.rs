//! The waypoint actor-critic: three CNN encoders (geometric crop, binaural
//! spectrogram, acoustic crop) fused through a GRU, with actor logits over
//! an s_w x s_w action map of agent-relative displacements and a scalar
//! value head. Occupied cells are masked out of the action map before
//! sampling; the center cell (0,0) is always available and means Stop.

mod action_map;
mod model;

pub use action_map::{mask_action_map, occupancy_mask, sample_waypoint, ActionMap, Waypoint};
pub use model::{
    load_policy, save_policy, AvWanModel, ModelConfig, PolicyManifest, StepObservation,
};
