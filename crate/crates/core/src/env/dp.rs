use super::{Policy, State, TabularMdp};

/// Per-timestep probability that the episode is alive and in each state:
/// `masses[t][s] = Pr(S_t = s, episode not ended before t)`, for `t < T`.
pub fn forward_state_masses(mdp: &TabularMdp, policy: &dyn Policy) -> Vec<Vec<f64>> {
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let mut masses = Vec::with_capacity(mdp.horizon_cap());
    let mut d = mdp.initial_dist().to_vec();
    for t in 0..mdp.horizon_cap() {
        let next = if t + 1 < mdp.horizon_cap() {
            let mut next = vec![0.0; ns];
            for (s, &mass) in d.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let state = State::Discrete(s);
                for a in 0..na {
                    let w = mass * policy.prob(&state, a);
                    if w == 0.0 {
                        continue;
                    }
                    for (s2, &p) in mdp.transition_row(s, a).iter().enumerate() {
                        next[s2] += w * p * (1.0 - mdp.termination()[s2]);
                    }
                }
            }
            Some(next)
        } else {
            None
        };
        masses.push(d);
        match next {
            Some(n) => d = n,
            None => break,
        }
    }
    masses
}

/// Exact expected undiscounted return `E[sum_{t=0}^{T-1} R_t]` by forward
/// propagation of the state distribution.
pub fn exact_return_dp(mdp: &TabularMdp, policy: &dyn Policy) -> f64 {
    forward_state_masses(mdp, policy)
        .iter()
        .map(|d| {
            d.iter()
                .enumerate()
                .map(|(s, &mass)| {
                    let state = State::Discrete(s);
                    mass * (0..mdp.num_actions()).map(|a| policy.prob(&state, a) * mdp.reward(s, a)).sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{RandomMdpParams, TabularPolicy};

    #[test]
    fn two_state_values() {
        let mdp = TabularMdp::two_state();
        let switch = TabularPolicy::deterministic("switch", &[1, 1], 2);
        assert_eq!(exact_return_dp(&mdp, &switch), 1.0);
        assert_eq!(exact_return_dp(&mdp, &TabularPolicy::uniform(2, 2)), 0.5);
        assert_eq!(exact_return_dp(&mdp.with_zero_rewards(), &switch), 0.0);
    }

    #[test]
    fn surviving_mass_is_non_increasing() {
        let params = RandomMdpParams {
            num_states: 8,
            num_actions: 3,
            horizon: 15,
            max_branching: 4,
        };
        for seed in 0..30 {
            let mdp = TabularMdp::random(params, seed);
            let pi = TabularPolicy::random(8, 3, seed + 100);
            let masses = forward_state_masses(&mdp, &pi);
            assert_eq!(masses.len(), 15);
            let totals: Vec<f64> = masses.iter().map(|d| d.iter().sum()).collect();
            assert!((totals[0] - 1.0).abs() <= 1e-12);
            for w in totals.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{totals:?}");
            }
        }
    }
}
