use crate::{Error, Result};

/// Generalized advantage estimation over one rollout window.
///
/// `last_value` bootstraps the step after the window (0 when the window
/// ends exactly at an episode boundary). Returns raw advantages and the
/// value targets (advantages + values); per-window normalization happens in
/// the PPO update.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    discount: f64,
    gae_lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if rewards.is_empty() {
        return Err(Error::Training("gae over an empty buffer".into()));
    }
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t == n - 1 { last_value } else { values[t + 1] };
        let delta = rewards[t] + discount * next_value * not_done - values[t];
        next_adv = delta + discount * gae_lambda * not_done * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// Normalize to zero mean, unit variance (numerically guarded).
pub fn normalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    values.iter().map(|v| (v - mean) / std).collect()
}
