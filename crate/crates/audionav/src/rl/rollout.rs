use crate::nn::Array;
use crate::policy::StepObservation;

/// One waypoint-granularity transition.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: StepObservation,
    /// Action-map mask active when the waypoint was sampled.
    pub mask: Vec<bool>,
    /// GRU state entering this step.
    pub hidden_in: Array<f32>,
    pub action_index: usize,
    /// Behavior log-probability of the sampled waypoint.
    pub log_prob: f64,
    pub value: f64,
    /// Cumulative reward of the planner round this waypoint triggered.
    pub reward: f64,
    /// True when the episode ended with (or during) this step.
    pub done: bool,
}

/// Fixed-capacity window of waypoint steps between PPO updates.
#[derive(Debug, Default)]
pub struct RolloutBuffer {
    transitions: Vec<Transition>,
    capacity: usize,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        RolloutBuffer { transitions: Vec::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, t: Transition) {
        assert!(self.transitions.len() < self.capacity, "rollout buffer overfilled");
        self.transitions.push(t);
    }

    pub fn is_full(&self) -> bool {
        self.transitions.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}
