use rand::Rng;
use rayon::prelude::*;

use super::Arp;
use crate::error::{Error, Result};
use crate::rng::{stream, StarRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutResult {
    pub mean: f64,
    pub stderr: f64,
    /// Episodes cut off at the step cap.
    pub truncated: usize,
}

fn draw(probs: &[f64], rng: &mut StarRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn episode(arp: &Arp, rng: &mut StarRng, step_cap: usize) -> (f64, bool) {
    let mut z = draw(arp.eta(), rng);
    let mut total = 0.0;
    for _ in 0..step_cap {
        total += arp.rewards()[z];
        if rng.gen::<f64>() < arp.beta()[z] {
            return (total, false);
        }
        z = draw(arp.p_row(z), rng);
    }
    (total, true)
}

/// Monte Carlo estimate of the ARP's expected return from `n` simulated episodes.
pub fn arp_rollout_return(arp: &Arp, n: usize, seed: u64, step_cap: usize) -> Result<RolloutResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("rollout needs at least one episode".into()));
    }
    let runs: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| episode(arp, &mut stream(seed, i as u64), step_cap))
        .collect();
    let truncated = runs.iter().filter(|r| r.1).count();
    if truncated > 0 {
        log::warn!("{truncated} of {n} ARP rollouts hit the step cap of {step_cap}");
    }
    let mean = runs.iter().map(|r| r.0).sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = runs.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(RolloutResult { mean, stderr, truncated })
}
