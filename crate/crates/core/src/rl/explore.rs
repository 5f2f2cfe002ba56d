use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Greedy with probability `1 - epsilon` (ties to the lowest index),
/// otherwise a Boltzmann draw at `temperature`.
pub fn select_action<R: Rng>(q_values: &[f64], epsilon: f64, temperature: f64, rng: &mut R) -> Result<usize> {
    if q_values.is_empty() {
        return Err(Error::param("q_values", "must not be empty"));
    }
    if let Some(q) = q_values.iter().find(|q| !q.is_finite()) {
        return Err(Error::NonFinite(format!("q value {q}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    if !(temperature > 0.0) {
        return Err(Error::param("temperature", format!("must be > 0, got {temperature}")));
    }
    let explore = rng.gen::<f64>() < epsilon;
    if !explore {
        return Ok(argmax(q_values));
    }
    let max = q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = q_values.iter().map(|q| ((q - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return Ok(i);
        }
        u -= w;
    }
    // rounding left a sliver past the last bucket
    Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Linear decay from `start` to `end` over the first `decay_steps` steps,
/// then constant at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl LinearSchedule {
    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}
