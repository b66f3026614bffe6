use rand_chacha::ChaCha8Rng;

use crate::nn::{Array, ParameterSet};
use crate::policy::{mask_action_map, occupancy_mask, sample_waypoint, AvWanModel, StepObservation};
use crate::seed::{self, Domain};
use crate::sim::{AgentView, Decision, NavAgent};

/// Evaluation wrapper around a (trained) waypoint policy: encodes the view,
/// masks the action map against the geometric map, samples a waypoint, and
/// carries the GRU state across waypoint steps within an episode.
pub struct AvWanAgent {
    pub model: AvWanModel,
    pub params: ParameterSet<f32>,
    sampling_seed: u64,
    hidden: Array<f32>,
    rng: ChaCha8Rng,
}

impl AvWanAgent {
    pub fn new(model: AvWanModel, params: ParameterSet<f32>, sampling_seed: u64) -> Self {
        let hidden = model.zero_hidden();
        AvWanAgent {
            model,
            params,
            sampling_seed,
            hidden,
            rng: seed::rng(sampling_seed, Domain::PolicySampling, 0),
        }
    }

    fn observation(&self, view: &AgentView) -> StepObservation {
        let cfg = &self.model.config;
        let spec = view.spectrogram.as_ref().expect("waypoint policy needs audio");
        StepObservation {
            geometric: view
                .geo
                .crop(view.pose, cfg.geometric_crop)
                .reshaped(&[1, 2, cfg.geometric_crop, cfg.geometric_crop]),
            spectrogram: spec.data().reshaped(&[1, 2, spec.freq_bins, spec.time_frames]),
            acoustic: view
                .aco
                .crop(view.pose, cfg.acoustic_crop)
                .reshaped(&[1, 1, cfg.acoustic_crop, cfg.acoustic_crop]),
        }
    }
}

impl NavAgent for AvWanAgent {
    fn name(&self) -> &str {
        "av-wan"
    }

    fn begin_episode(&mut self, episode_seed: u64) {
        self.hidden = self.model.zero_hidden();
        self.rng = seed::rng(self.sampling_seed, Domain::PolicySampling, episode_seed);
    }

    fn decide(&mut self, view: &AgentView) -> Decision {
        let obs = self.observation(view);
        let (logits, value, hidden) = self.model.predict(&self.params, &obs, &self.hidden);
        self.hidden = hidden;
        let mask = occupancy_mask(view.geo, view.pose, self.model.config.action_map_size);
        let amap = mask_action_map(logits.data(), &mask, self.model.config.action_map_size);
        let wp = sample_waypoint(&amap, &mut self.rng);
        Decision::Waypoint {
            wp,
            value: Some(value),
            masked_cells: amap.masked_count(),
            limit: None,
        }
    }
}
