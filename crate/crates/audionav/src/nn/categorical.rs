use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

fn validate(probs: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("probs[{i}] = {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(total)
}

/// Sample an index from a categorical distribution.
pub fn categorical_sample(probs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize> {
    let total = validate(probs)?;
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // Float roundoff can leave u barely above the final cumulative sum.
    Ok(last_positive)
}

/// log probs[index]; -inf for zero-probability entries.
pub fn log_prob(probs: &[f64], index: usize) -> Result<f64> {
    validate(probs)?;
    Ok(probs[index].ln())
}

/// Shannon entropy in nats, with 0 log 0 = 0.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    validate(probs)?;
    Ok(probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
}
