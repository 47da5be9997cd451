//! Importance-sampling baselines over full-trajectory weights `rho_{0:t}`.

use super::weights::{compute_weights, Clip};
use crate::env::{Dataset, Policy};
use crate::error::{Error, Result};

fn full_weights(data: &Dataset, pi_e: &dyn Policy) -> Result<Vec<Vec<f64>>> {
    if data.is_empty() || data.episodes.iter().any(|e| e.is_empty()) {
        return Err(Error::EmptyInput("dataset needs at least one non-empty episode"));
    }
    Ok(compute_weights(data, pi_e, Clip::Unclipped)?.weights)
}

/// `(1/n) sum_i rho^i_{0:T_i-1} G_i`.
pub fn is_estimate(data: &Dataset, pi_e: &dyn Policy) -> Result<f64> {
    let w = full_weights(data, pi_e)?;
    let total: f64 = data
        .episodes
        .iter()
        .zip(&w)
        .map(|(e, w)| w[w.len() - 1] * e.total_reward())
        .sum();
    Ok(total / data.len() as f64)
}

/// `(1/n) sum_i sum_t rho^i_{0:t} R^i_t`.
pub fn pdis_estimate(data: &Dataset, pi_e: &dyn Policy) -> Result<f64> {
    let w = full_weights(data, pi_e)?;
    let total: f64 = data
        .episodes
        .iter()
        .zip(&w)
        .map(|(e, w)| e.steps.iter().zip(w).map(|(s, w)| w * s.reward).sum::<f64>())
        .sum();
    Ok(total / data.len() as f64)
}

/// `sum_i rho^i G_i / sum_i rho^i`; zero when every weight vanishes.
pub fn wis_estimate(data: &Dataset, pi_e: &dyn Policy) -> Result<f64> {
    let w = full_weights(data, pi_e)?;
    let (num, den) = data
        .episodes
        .iter()
        .zip(&w)
        .fold((0.0, 0.0), |(n, d), (e, w)| {
            let last = w[w.len() - 1];
            (n + last * e.total_reward(), d + last)
        });
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// `sum_t (sum_i rho^i_{0:t} R^i_t / sum_i rho^i_{0:t})`.
///
/// Episodes that ended before `t` contribute no reward at `t` but keep their
/// final weight in the normaliser, as if padded with an absorbing zero-reward
/// state. A step whose normaliser is zero contributes zero.
pub fn wpdis_estimate(data: &Dataset, pi_e: &dyn Policy) -> Result<f64> {
    let w = full_weights(data, pi_e)?;
    let horizon = data.episodes.iter().map(|e| e.len()).max().unwrap_or(0);
    let mut total = 0.0;
    for t in 0..horizon {
        let mut num = 0.0;
        let mut den = 0.0;
        for (e, w) in data.episodes.iter().zip(&w) {
            match e.steps.get(t) {
                Some(step) => {
                    num += w[t] * step.reward;
                    den += w[t];
                }
                None => den += w[w.len() - 1],
            }
        }
        if den > 0.0 {
            total += num / den;
        }
    }
    Ok(total)
}
