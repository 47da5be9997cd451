use super::weights::{compute_weights, Clip, WeightTable};
use crate::abstraction::Abstraction;
use crate::arp::{Arp, ArpStats};
use crate::env::{Dataset, Policy};
use crate::error::{Error, Result};

/// The two knobs of a STAR estimator plus the policy being evaluated.
#[derive(Clone, Copy)]
pub struct StarConfig<'a> {
    pub abstraction: &'a Abstraction,
    pub clip: Clip,
    pub pi_e: &'a dyn Policy,
}

/// Estimated ARP with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StarFit {
    pub arp: Arp,
    /// Abstract states present in the data whose total weight was zero.
    pub zero_weight_states: Vec<usize>,
    pub weights: WeightTable,
}

/// Weighted counts over abstract trajectories. Transition sums skip each
/// episode's final step; that step feeds the termination sum instead.
fn accumulate(data: &Dataset, abstraction: &Abstraction, weight: impl Fn(usize, usize) -> f64) -> ArpStats {
    let mut stats = ArpStats::new(abstraction.num_abstract());
    for (i, z) in abstraction.apply(data).into_iter().enumerate() {
        stats.start(z[0], 1.0);
        let steps = &data.episodes[i].steps;
        for t in 0..z.len() {
            stats.visit(z[t], weight(i, t), steps[t].reward, z.get(t + 1).copied());
        }
    }
    stats
}

fn check(data: &Dataset) -> Result<()> {
    if data.is_empty() || data.episodes.iter().any(|e| e.is_empty()) {
        return Err(Error::EmptyInput("dataset needs at least one non-empty episode"));
    }
    Ok(())
}

/// Count-based maximum-likelihood ARP from on-policy data.
pub fn estimate_arp_on_policy(data: &Dataset, abstraction: &Abstraction) -> Result<Arp> {
    check(data)?;
    Ok(accumulate(data, abstraction, |_, _| 1.0).finish().arp)
}

/// Importance-weighted maximum-likelihood ARP for `config.pi_e` from data
/// logged under the behavior policy.
pub fn fit_arp_off_policy(data: &Dataset, config: &StarConfig<'_>) -> Result<StarFit> {
    check(data)?;
    let weights = compute_weights(data, config.pi_e, config.clip)?;
    let fit = accumulate(data, config.abstraction, |i, t| weights.weights[i][t]).finish();
    if !fit.zero_weight_states.is_empty() {
        log::debug!(
            "abstract states {:?} have zero total weight; using the unvisited convention",
            fit.zero_weight_states
        );
    }
    Ok(StarFit {
        arp: fit.arp,
        zero_weight_states: fit.zero_weight_states,
        weights,
    })
}

pub fn estimate_arp_off_policy(data: &Dataset, config: &StarConfig<'_>) -> Result<Arp> {
    fit_arp_off_policy(data, config).map(|f| f.arp)
}

/// Estimated expected return of `config.pi_e`: weights, weighted ARP, closed form.
pub fn star_estimate(data: &Dataset, config: &StarConfig<'_>) -> Result<f64> {
    fit_arp_off_policy(data, config)?.arp.expected_return()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{exact_return_dp, sample_trajectories, RandomMdpParams, TabularMdp, TabularPolicy, UniformPolicy};

    fn switch() -> TabularPolicy {
        TabularPolicy::deterministic("switch", &[1, 1], 2)
    }

    #[test]
    fn counting_identical_episodes() {
        let data = sample_trajectories(&TabularMdp::two_state(), &switch(), 3, 0).unwrap();
        let arp = estimate_arp_on_policy(&data, &Abstraction::identity(2)).unwrap();
        assert_eq!(arp.p(0, 1), 1.0);
        assert_eq!(arp.rewards(), &[0.0, 1.0]);
        assert_eq!(arp.eta(), &[1.0, 0.0]);
        assert_eq!(arp.beta(), &[0.0, 1.0]);
    }

    #[test]
    fn single_abstraction_pools_everything() {
        let mdp = TabularMdp::random(
            RandomMdpParams {
                num_states: 5,
                num_actions: 2,
                horizon: 12,
                max_branching: 3,
            },
            1,
        );
        let data = sample_trajectories(&mdp, &UniformPolicy::new(2), 300, 4).unwrap();
        let arp = estimate_arp_on_policy(&data, &Abstraction::single()).unwrap();
        let steps = data.total_steps() as f64;
        let reward: f64 = data.episodes.iter().map(|e| e.total_reward()).sum();
        assert!((arp.rewards()[0] - reward / steps).abs() < 1e-12);
        assert!((arp.beta()[0] - data.len() as f64 / steps).abs() < 1e-12);
        assert!((arp.expected_return().unwrap() - data.mean_return()).abs() < 1e-10);
    }

    #[test]
    fn unseen_abstract_state_is_hardcoded() {
        let data = sample_trajectories(&TabularMdp::two_state(), &switch(), 2, 0).unwrap();
        let phi = Abstraction::lookup(vec![0, 1], 3).unwrap();
        let arp = estimate_arp_on_policy(&data, &phi).unwrap();
        assert!(!arp.visited()[2]);
        assert_eq!((arp.p(2, 2), arp.rewards()[2], arp.eta()[2]), (1.0, 0.0, 0.0));
    }

    #[test]
    fn same_policy_is_bitwise_on_policy() {
        let mdp = TabularMdp::random(
            RandomMdpParams {
                num_states: 6,
                num_actions: 3,
                horizon: 10,
                max_branching: 3,
            },
            2,
        );
        let pi = TabularPolicy::random(6, 3, 3);
        let data = sample_trajectories(&mdp, &pi, 500, 9).unwrap();
        for phi in [Abstraction::identity(6), Abstraction::single(), Abstraction::lookup(vec![0, 1, 0, 1, 2, 2], 3).unwrap()] {
            for clip in [Clip::Unclipped, Clip::Window(1), Clip::Window(2)] {
                let config = StarConfig {
                    abstraction: &phi,
                    clip,
                    pi_e: &pi,
                };
                assert_eq!(estimate_arp_off_policy(&data, &config).unwrap(), estimate_arp_on_policy(&data, &phi).unwrap());
            }
        }
    }

    fn two_state_estimate(data: &Dataset, clip: Clip) -> f64 {
        let phi = Abstraction::identity(2);
        star_estimate(
            data,
            &StarConfig {
                abstraction: &phi,
                clip,
                pi_e: &switch(),
            },
        )
        .unwrap()
    }

    #[test]
    fn off_policy_two_state_converges() {
        let data = sample_trajectories(&TabularMdp::two_state(), &UniformPolicy::new(2), 10_000, 17).unwrap();
        let truth = exact_return_dp(&TabularMdp::two_state(), &switch());
        assert_eq!(truth, 1.0);
        let est = two_state_estimate(&data, Clip::Unclipped);
        assert!((est - truth).abs() <= 0.05, "{est}");
    }

    #[test]
    fn one_step_clip_sees_horizon_termination() {
        // The horizon cap makes termination depend on time, not state. With
        // c = 1, state 0 at the final step keeps weight 1 on average, so
        // beta(0) tends to 1/3 and the estimate to 2/3.
        let data = sample_trajectories(&TabularMdp::two_state(), &UniformPolicy::new(2), 10_000, 17).unwrap();
        let est = two_state_estimate(&data, Clip::Window(1));
        assert!((est - 2.0 / 3.0).abs() <= 0.05, "{est}");
    }

    #[test]
    fn zero_weight_states_fall_back() {
        // Behavior always stays, the target always switches: nothing the
        // target does is ever logged.
        let stay = TabularPolicy::deterministic("stay", &[0, 0], 2);
        let data = sample_trajectories(&TabularMdp::two_state(), &stay, 5, 0).unwrap();
        let phi = Abstraction::identity(2);
        let fit = fit_arp_off_policy(
            &data,
            &StarConfig {
                abstraction: &phi,
                clip: Clip::Unclipped,
                pi_e: &switch(),
            },
        )
        .unwrap();
        assert_eq!(fit.zero_weight_states, vec![0]);
        assert_eq!(fit.arp.expected_return().unwrap(), 0.0);
    }

    #[test]
    fn zero_rewards_estimate_zero() {
        let mdp = TabularMdp::two_state().with_zero_rewards();
        let data = sample_trajectories(&mdp, &UniformPolicy::new(2), 50, 0).unwrap();
        let phi = Abstraction::identity(2);
        let config = StarConfig {
            abstraction: &phi,
            clip: Clip::Unclipped,
            pi_e: &switch(),
        };
        assert_eq!(star_estimate(&data, &config).unwrap(), 0.0);
    }
}
