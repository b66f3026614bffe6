use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::Action;
use crate::seed::{self, Domain};
use crate::sim::{AgentView, Decision, NavAgent};

/// Uniform random motion; signals Stop on reaching the goal.
pub struct RandomAgent {
    base_seed: u64,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(base_seed: u64) -> Self {
        RandomAgent { base_seed, rng: seed::rng(base_seed, Domain::PolicySampling, 0) }
    }
}

impl NavAgent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn begin_episode(&mut self, episode_seed: u64) {
        self.rng = seed::rng(self.base_seed, Domain::PolicySampling, episode_seed);
    }

    fn wants_spectrogram(&self) -> bool {
        false
    }

    fn decide(&mut self, view: &AgentView) -> Decision {
        if view.at_goal {
            return Decision::Primitive(Action::Stop);
        }
        let action = [Action::MoveForward, Action::TurnLeft, Action::TurnRight]
            [self.rng.gen_range(0..3)];
        Decision::Primitive(action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{AgentPose, Cell, Heading};
    use crate::mapping::{AcousticMap, GeometricMap};

    #[test]
    fn action_frequencies_are_uniform() {
        let mut agent = RandomAgent::new(5);
        agent.begin_episode(0);
        let geo = GeometricMap::new(Cell::new(0, 0), 0.5);
        let aco = AcousticMap::new(Cell::new(0, 0));
        let view = AgentView {
            pose: AgentPose::new(Cell::new(0, 0), Heading::North),
            step_count: 0,
            geo: &geo,
            aco: &aco,
            spectrogram: None,
            intensity: 0.0,
            doa_bin: None,
            at_goal: false,
        };
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            match agent.decide(&view) {
                Decision::Primitive(Action::MoveForward) => counts[0] += 1,
                Decision::Primitive(Action::TurnLeft) => counts[1] += 1,
                Decision::Primitive(Action::TurnRight) => counts[2] += 1,
                other => panic!("unexpected decision {other:?}"),
            }
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.02, "frequency {f}");
        }
    }

    #[test]
    fn stops_at_goal() {
        let mut agent = RandomAgent::new(5);
        agent.begin_episode(1);
        let geo = GeometricMap::new(Cell::new(0, 0), 0.5);
        let aco = AcousticMap::new(Cell::new(0, 0));
        let view = AgentView {
            pose: AgentPose::new(Cell::new(0, 0), Heading::North),
            step_count: 10,
            geo: &geo,
            aco: &aco,
            spectrogram: None,
            intensity: 0.5,
            doa_bin: None,
            at_goal: true,
        };
        assert!(matches!(agent.decide(&view), Decision::Primitive(Action::Stop)));
    }
}
