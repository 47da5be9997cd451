use std::collections::BTreeMap;

use super::Abstraction;
use crate::env::Dataset;

type Counts = BTreeMap<Vec<usize>, BTreeMap<usize, f64>>;

/// Empirical check of whether abstract transitions depend on more than the
/// last `c` abstract states.
///
/// For every step with at least `c` predecessors, the outcome (next abstract
/// state, or termination) is tallied against both its `c + 1`-state and its
/// `c`-state history. The score is the visit-weighted total-variation distance
/// between the two conditional outcome distributions: 0 when the longer
/// history adds nothing, at most 1.
pub fn markov_violation_score(data: &Dataset, abstraction: &Abstraction, c: usize) -> f64 {
    let terminal = abstraction.num_abstract();
    let mut long: Counts = BTreeMap::new();
    let mut short: Counts = BTreeMap::new();
    for z in abstraction.apply(data) {
        for t in c..z.len() {
            let outcome = z.get(t + 1).copied().unwrap_or(terminal);
            *long.entry(z[t - c..=t].to_vec()).or_default().entry(outcome).or_default() += 1.0;
            *short.entry(z[t + 1 - c..=t].to_vec()).or_default().entry(outcome).or_default() += 1.0;
        }
    }
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (history, outcomes) in &long {
        let n: f64 = outcomes.values().sum();
        let reference = &short[&history[1..]];
        let m: f64 = reference.values().sum();
        let mut tv = 0.0;
        for (o, &count) in reference {
            tv += (outcomes.get(o).copied().unwrap_or(0.0) / n - count / m).abs();
        }
        for (o, &count) in outcomes {
            if !reference.contains_key(o) {
                tv += count / n;
            }
        }
        weighted += n * 0.5 * tv;
        total += n;
    }
    if total == 0.0 {
        0.0
    } else {
        weighted / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_trajectories, Episode, Provenance, RandomMdpParams, State, Step, TabularMdp, UniformPolicy};

    #[test]
    fn single_short_episode_scores_zero() {
        let data = Dataset {
            episodes: vec![Episode {
                steps: vec![Step {
                    state: State::Discrete(0),
                    action: 0,
                    reward: 1.0,
                    behavior_prob: 1.0,
                }],
            }],
            provenance: Provenance {
                env_id: "x".into(),
                policy_id: "y".into(),
                seed: 0,
            },
        };
        assert_eq!(markov_violation_score(&data, &Abstraction::identity(1), 1), 0.0);
    }

    #[test]
    fn identity_on_an_mdp_shrinks_with_data() {
        let mdp = TabularMdp::random(
            RandomMdpParams {
                num_states: 4,
                num_actions: 2,
                horizon: 10,
                max_branching: 3,
            },
            5,
        );
        let phi = Abstraction::identity(4);
        let small = markov_violation_score(&sample_trajectories(&mdp, &UniformPolicy::new(2), 100, 1).unwrap(), &phi, 1);
        let large = markov_violation_score(&sample_trajectories(&mdp, &UniformPolicy::new(2), 20_000, 1).unwrap(), &phi, 1);
        assert!(large < small, "{large} vs {small}");
        assert!(large < 0.03, "{large}");
    }

    #[test]
    fn single_abstraction_on_two_state_is_small() {
        let data = sample_trajectories(&TabularMdp::two_state(), &UniformPolicy::new(2), 10_000, 2).unwrap();
        assert!(markov_violation_score(&data, &Abstraction::single(), 1) < 0.01);
    }

    #[test]
    fn detects_history_dependence() {
        // Alternating 0,1,0,1 vs. 0,0,1,1 runs make "next after 0" depend on what came before.
        let mk = |zs: &[usize]| Episode {
            steps: zs
                .iter()
                .map(|&s| Step {
                    state: State::Discrete(s),
                    action: 0,
                    reward: 0.0,
                    behavior_prob: 1.0,
                })
                .collect(),
        };
        let data = Dataset {
            episodes: (0..50).flat_map(|_| [mk(&[1, 0, 1, 0, 1]), mk(&[0, 0, 0, 0, 0])]).collect(),
            provenance: Provenance {
                env_id: "x".into(),
                policy_id: "y".into(),
                seed: 0,
            },
        };
        assert!(markov_violation_score(&data, &Abstraction::identity(2), 1) > 0.2);
    }
}
