use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::gae::{gae_advantages, normalize};
use super::rollout::{RolloutBuffer, Transition};
use crate::nn::{adam_step, AdamConfig, AdamState, Array, GraphParams, Graph, ParameterSet, Tensor};
use crate::policy::AvWanModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub entropy_coeff: f64,
    pub value_coeff: f64,
    pub adam: AdamConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_epsilon: 0.2,
            discount: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatches: 2,
            entropy_coeff: 0.02,
            value_coeff: 0.5,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total_loss: f64,
    pub minibatch_updates: usize,
}

/// Clipped-surrogate loss over one contiguous sequence chunk. The hidden
/// state starts from the stored value at the chunk head and resets at
/// episode boundaries, mirroring collection.
pub(crate) fn chunk_loss<'g>(
    graph: &'g Graph<f32>,
    gp: &GraphParams<'g, f32>,
    model: &AvWanModel,
    chunk: &[Transition],
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
) -> (Tensor<'g, f32>, f64, f64, f64) {
    let mut hidden = graph.leaf(chunk[0].hidden_in.clone(), false);
    let mut policy_sum: Option<Tensor<f32>> = None;
    let mut value_sum: Option<Tensor<f32>> = None;
    let mut entropy_sum: Option<Tensor<f32>> = None;
    let mut add = |acc: &mut Option<Tensor<'g, f32>>, v: Tensor<'g, f32>| {
        *acc = Some(match acc.take() {
            Some(a) => a.add(v),
            None => v,
        });
    };
    for (t, tr) in chunk.iter().enumerate() {
        let (logits, value, next_hidden) = model.predict_t(graph, gp, &tr.obs, hidden);
        let mask = Rc::new(tr.mask.clone());
        let logp_row = logits.reshape(&[1, model.config.action_cells()]).masked_log_softmax(mask.clone());
        let logp = logp_row.pick(tr.action_index);
        let ratio = logp.affine(1.0, -(tr.log_prob as f32)).exp();
        let adv = advantages[t] as f32;
        let surr1 = ratio.affine(adv, 0.0);
        let surr2 = ratio
            .clamp(1.0 - cfg.clip_epsilon as f32, 1.0 + cfg.clip_epsilon as f32)
            .affine(adv, 0.0);
        add(&mut policy_sum, surr1.min2(surr2));
        let vdiff = value.affine(1.0, -(returns[t] as f32));
        add(&mut value_sum, vdiff.mul(vdiff));
        add(&mut entropy_sum, logp_row.masked_entropy(mask));
        hidden = if tr.done {
            graph.leaf(Array::zeros(&[1, model.config.hidden_dim]), false)
        } else {
            next_hidden
        };
    }
    let inv_n = 1.0 / chunk.len() as f32;
    let policy_mean = policy_sum.unwrap().affine(inv_n, 0.0);
    let value_mean = value_sum.unwrap().affine(inv_n, 0.0);
    let entropy_mean = entropy_sum.unwrap().affine(inv_n, 0.0);
    let loss = policy_mean
        .affine(-1.0, 0.0)
        .add(value_mean.affine(cfg.value_coeff as f32, 0.0))
        .add(entropy_mean.affine(-(cfg.entropy_coeff as f32), 0.0));
    (
        loss,
        -(policy_mean.item() as f64),
        value_mean.item() as f64,
        entropy_mean.item() as f64,
    )
}

/// PPO over a full rollout window: GAE with per-window advantage
/// normalization, then `epochs` passes over contiguous sequence-chunk
/// minibatches with Adam. A non-finite loss aborts the update and reports.
pub fn ppo_update(
    model: &AvWanModel,
    params: &mut ParameterSet<f32>,
    opt: &mut AdamState<f32>,
    buffer: &RolloutBuffer,
    last_value: f64,
    cfg: &PpoConfig,
) -> Result<PpoStats> {
    if buffer.is_empty() {
        return Err(Error::Training("ppo_update on an empty buffer".into()));
    }
    let transitions = buffer.transitions();
    let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = transitions.iter().map(|t| t.value).collect();
    let dones: Vec<bool> = transitions.iter().map(|t| t.done).collect();
    let (advantages, returns) =
        gae_advantages(&rewards, &values, &dones, last_value, cfg.discount, cfg.gae_lambda)?;
    let advantages = normalize(&advantages);

    let n = transitions.len();
    let chunk_len = n.div_ceil(cfg.minibatches.max(1));
    let mut stats = PpoStats::default();
    for _epoch in 0..cfg.epochs {
        for start in (0..n).step_by(chunk_len) {
            let end = (start + chunk_len).min(n);
            let graph = Graph::new();
            let gp = GraphParams::bind(&graph, params);
            let (loss, pl, vl, ent) = chunk_loss(
                &graph,
                &gp,
                model,
                &transitions[start..end],
                &advantages[start..end],
                &returns[start..end],
                cfg,
            );
            let loss_value = loss.item() as f64;
            if !loss_value.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite PPO loss ({loss_value}); update aborted"
                )));
            }
            graph.backward(loss);
            let grads = gp.grads(&graph, params);
            adam_step(params, &grads, opt, &cfg.adam);
            stats.policy_loss += pl;
            stats.value_loss += vl;
            stats.entropy += ent;
            stats.total_loss += loss_value;
            stats.minibatch_updates += 1;
        }
    }
    let k = stats.minibatch_updates as f64;
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.total_loss /= k;
    Ok(stats)
}
