use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{AgentPose, Cell};
use crate::mapping::{CellKnowledge, GeometricMap};
use crate::nn::categorical_sample;

/// Agent-relative waypoint displacement in environment cells: `dx` to the
/// agent's right, `dy` forward. (0,0) means Stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Waypoint {
    pub dx: i32,
    pub dy: i32,
}

impl Waypoint {
    pub fn is_stop(&self) -> bool {
        self.dx == 0 && self.dy == 0
    }

    /// Target environment cell under a pose.
    pub fn world_cell(&self, pose: AgentPose) -> Cell {
        let (wx, wy) = pose.heading.agent_to_world(self.dx, self.dy);
        pose.cell.offset(wx, wy)
    }

    /// Flat action-map index (row 0 is the far-forward edge).
    pub fn index(&self, size: usize) -> usize {
        let half = (size / 2) as i32;
        let r = (half - self.dy) as usize;
        let c = (self.dx + half) as usize;
        r * size + c
    }

    pub fn from_index(index: usize, size: usize) -> Waypoint {
        let half = (size / 2) as i32;
        let r = (index / size) as i32;
        let c = (index % size) as i32;
        Waypoint { dx: c - half, dy: half - r }
    }

    /// Euclidean length in meters.
    pub fn length_m(&self, cell_size: f64) -> f64 {
        ((self.dx as f64).powi(2) + (self.dy as f64).powi(2)).sqrt() * cell_size
    }
}

/// Masked categorical distribution over candidate waypoints.
#[derive(Debug, Clone)]
pub struct ActionMap {
    pub size: usize,
    /// Flat s_w^2 probabilities; masked entries are exactly zero and the
    /// rest sum to one.
    pub probs: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ActionMap {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }
}

/// Occupancy mask for the action map under a pose: cells whose mapped
/// environment cell is known occupied are excluded; unexplored cells stay
/// available (the planner treats them as free space too). The center is
/// always available.
pub fn occupancy_mask(map: &GeometricMap, pose: AgentPose, size: usize) -> Vec<bool> {
    let mut mask = vec![true; size * size];
    for index in 0..size * size {
        let wp = Waypoint::from_index(index, size);
        if wp.is_stop() {
            continue;
        }
        if map.env_cell_knowledge(wp.world_cell(pose)) == CellKnowledge::Occupied {
            mask[index] = false;
        }
    }
    mask
}

/// Masked softmax over actor logits. Masked cells get probability zero; if
/// everything but the center is masked the distribution collapses to Stop.
pub fn mask_action_map(logits: &[f32], mask: &[bool], size: usize) -> ActionMap {
    assert_eq!(logits.len(), size * size, "logit count");
    assert_eq!(mask.len(), logits.len(), "mask length");
    let center = Waypoint { dx: 0, dy: 0 }.index(size);
    assert!(mask[center], "center cell must never be masked");
    let mut maxv = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if mask[i] {
            maxv = maxv.max(l as f64);
        }
    }
    let mut probs = vec![0.0f64; logits.len()];
    let mut denom = 0.0;
    for (i, &l) in logits.iter().enumerate() {
        if mask[i] {
            let e = ((l as f64) - maxv).exp();
            probs[i] = e;
            denom += e;
        }
    }
    if probs.iter().filter(|&&p| p > 0.0).count() == 1 {
        log::debug!("action map collapsed to Stop (all non-center cells masked)");
    }
    for p in &mut probs {
        *p /= denom;
    }
    ActionMap { size, probs, mask: mask.to_vec() }
}

/// Sample a waypoint from the masked distribution.
pub fn sample_waypoint(map: &ActionMap, rng: &mut ChaCha8Rng) -> Waypoint {
    let index = categorical_sample(&map.probs, rng).expect("action map probabilities are valid");
    Waypoint::from_index(index, map.size)
}
