use rayon::prelude::*;

use super::{sample_action, Dataset, Environment, Episode, Policy, Provenance, Step};
use crate::error::{Error, Result};
use crate::rng::{stream, StarRng};

/// Rolls out one episode; the final step is the one after which the
/// environment terminated or the horizon cap was reached.
pub fn sample_episode(env: &dyn Environment, policy: &dyn Policy, rng: &mut StarRng) -> Result<Episode> {
    let cap = env.horizon_cap();
    let mut steps = Vec::new();
    let mut state = env.reset(rng);
    for t in 0..cap {
        let (action, behavior_prob) = sample_action(policy, &state, rng)?;
        let outcome = env.step(&state, action, rng);
        steps.push(Step {
            state,
            action,
            reward: outcome.reward,
            behavior_prob,
        });
        if outcome.terminated || t + 1 == cap {
            break;
        }
        state = outcome.next;
    }
    Ok(Episode { steps })
}

/// Logs `n` episodes of `policy` in `env`. Episode `i` uses stream `i` of `seed`.
pub fn sample_trajectories(env: &dyn Environment, policy: &dyn Policy, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot sample zero episodes".into()));
    }
    check_compatible(env, policy)?;
    let episodes = (0..n)
        .into_par_iter()
        .map(|i| sample_episode(env, policy, &mut stream(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        episodes,
        provenance: Provenance {
            env_id: env.id(),
            policy_id: policy.id(),
            seed,
        },
    })
}

fn check_compatible(env: &dyn Environment, policy: &dyn Policy) -> Result<()> {
    if env.num_actions() != policy.num_actions() {
        return Err(Error::InvalidArgument(format!(
            "environment has {} actions but policy has {}",
            env.num_actions(),
            policy.num_actions()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of the expected return with its standard error.
pub fn monte_carlo_return(env: &dyn Environment, policy: &dyn Policy, n: usize, seed: u64) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument("Monte Carlo return needs at least 2 episodes".into()));
    }
    check_compatible(env, policy)?;
    let returns = (0..n)
        .into_par_iter()
        .map(|i| sample_episode(env, policy, &mut stream(seed, i as u64)).map(|e| e.total_reward()))
        .collect::<Result<Vec<f64>>>()?;
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = returns.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(McEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
    })
}
