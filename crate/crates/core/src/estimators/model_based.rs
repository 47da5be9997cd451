//! Model-based baseline: maximum-likelihood `(p, r, beta, eta)` over
//! `(state, action)`, combined with the evaluation policy and solved exactly.

use crate::abstraction::Abstraction;
use crate::arp::Arp;
use crate::env::{Dataset, Policy, State};
use crate::error::{Error, Result};

struct Counts {
    nz: usize,
    na: usize,
    visits: Vec<f64>,
    terminal: Vec<f64>,
    reward: Vec<f64>,
    /// `[z][a][z']`.
    transition: Vec<f64>,
    initial: Vec<f64>,
    observed: Vec<bool>,
}

impl Counts {
    fn from_data(data: &Dataset, z: &[Vec<usize>], nz: usize, na: usize) -> Result<Self> {
        let mut c = Counts {
            nz,
            na,
            visits: vec![0.0; nz * na],
            terminal: vec![0.0; nz * na],
            reward: vec![0.0; nz * na],
            transition: vec![0.0; nz * na * nz],
            initial: vec![0.0; nz],
            observed: vec![false; nz],
        };
        for (ep, zs) in data.episodes.iter().zip(z) {
            c.initial[zs[0]] += 1.0;
            for (t, step) in ep.steps.iter().enumerate() {
                if step.action >= na {
                    return Err(Error::InvalidArgument(format!("action {} outside the policy's {na} actions", step.action)));
                }
                let sa = zs[t] * na + step.action;
                c.observed[zs[t]] = true;
                c.visits[sa] += 1.0;
                c.reward[sa] += step.reward;
                match zs.get(t + 1) {
                    Some(&z2) => c.transition[sa * nz + z2] += 1.0,
                    None => c.terminal[sa] += 1.0,
                }
            }
        }
        Ok(c)
    }

    /// Induced process under `pi[z][a]`. Unvisited `(z, a)` pairs end the
    /// episode with zero reward, which is the value of a zero-reward self-loop.
    fn induced(&self, pi: &[Vec<f64>]) -> Result<Arp> {
        let (nz, na) = (self.nz, self.na);
        let mut p = vec![vec![0.0; nz]; nz];
        let mut r = vec![0.0; nz];
        let mut beta = vec![1.0; nz];
        for z in 0..nz {
            let mut end = 0.0;
            let mut reward = 0.0;
            let mut flow = vec![0.0; nz];
            for a in 0..na {
                let pa = pi[z][a];
                let sa = z * na + a;
                let row = &self.transition[sa * nz..(sa + 1) * nz];
                let continuing: f64 = row.iter().sum();
                if pa == 0.0 || self.visits[sa] == 0.0 {
                    end += pa;
                    continue;
                }
                let b = self.terminal[sa] / self.visits[sa];
                end += pa * b;
                reward += pa * self.reward[sa] / self.visits[sa];
                if continuing > 0.0 {
                    for (f, &w) in flow.iter_mut().zip(row) {
                        *f += pa * (1.0 - b) * w / continuing;
                    }
                }
            }
            let total_flow: f64 = flow.iter().sum();
            if self.observed[z] && total_flow > 0.0 {
                for (dst, f) in p[z].iter_mut().zip(&flow) {
                    *dst = f / total_flow;
                }
                beta[z] = end.clamp(0.0, 1.0);
            } else {
                p[z][z] = 1.0;
            }
            if self.observed[z] {
                r[z] = reward;
            }
        }
        let n: f64 = self.initial.iter().sum();
        let eta = self.initial.iter().map(|c| c / n).collect();
        Arp::new(p, r, eta, beta, self.observed.clone())
    }
}

fn check(data: &Dataset) -> Result<()> {
    if data.is_empty() || data.episodes.iter().any(|e| e.is_empty()) {
        return Err(Error::EmptyInput("dataset needs at least one non-empty episode"));
    }
    Ok(())
}

/// Tabular model-based estimate of `pi_e`'s return from raw discrete states.
pub fn model_based_estimate(data: &Dataset, pi_e: &dyn Policy, num_states: usize) -> Result<f64> {
    check(data)?;
    let na = pi_e.num_actions();
    let z: Vec<Vec<usize>> = data
        .episodes
        .iter()
        .map(|e| {
            e.steps
                .iter()
                .map(|s| match s.state {
                    State::Discrete(i) if i < num_states => Ok(i),
                    _ => Err(Error::InvalidArgument(format!("state {} is not a tabular state below {num_states}", s.state))),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let pi: Vec<Vec<f64>> = (0..num_states).map(|s| pi_e.probs(&State::Discrete(s))).collect();
    Counts::from_data(data, &z, num_states, na)?.induced(&pi)?.expected_return()
}

/// Model-based estimate over a discretisation of the state space.
///
/// `pi_e(z, a)` is the average of `pi_e(s, a)` over the logged states that
/// fall into `z`.
pub fn model_based_estimate_abstracted(data: &Dataset, pi_e: &dyn Policy, abstraction: &Abstraction) -> Result<f64> {
    check(data)?;
    let nz = abstraction.num_abstract();
    let na = pi_e.num_actions();
    let z = abstraction.apply(data);
    let mut pi = vec![vec![0.0; na]; nz];
    let mut count = vec![0usize; nz];
    for (ep, zs) in data.episodes.iter().zip(&z) {
        for (step, &zi) in ep.steps.iter().zip(zs) {
            count[zi] += 1;
            for (acc, p) in pi[zi].iter_mut().zip(pi_e.probs(&step.state)) {
                *acc += p;
            }
        }
    }
    for (row, &c) in pi.iter_mut().zip(&count) {
        if c == 0 {
            row.iter_mut().for_each(|p| *p = 1.0 / na as f64);
        } else {
            row.iter_mut().for_each(|p| *p /= c as f64);
        }
    }
    Counts::from_data(data, &z, nz, na)?.induced(&pi)?.expected_return()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{exact_return_dp, sample_trajectories, Episode, Provenance, Step, TabularMdp, TabularPolicy, UniformPolicy};

    #[test]
    fn on_policy_converges_on_two_state() {
        let mdp = TabularMdp::two_state();
        let pi = TabularPolicy::uniform(2, 2);
        let data = sample_trajectories(&mdp, &pi, 20_000, 5).unwrap();
        let est = model_based_estimate(&data, &pi, 2).unwrap();
        assert!((est - exact_return_dp(&mdp, &pi)).abs() < 0.02, "{est}");
    }

    #[test]
    fn deterministic_coverage_recovers_exact_value() {
        // Deterministic chain 0 -> 1 -> 2 (terminal on entry), actions 0/1
        // with different rewards; data covers every (s, a) once.
        #[rustfmt::skip]
        let p = vec![
            0.0, 1.0, 0.0,   0.0, 1.0, 0.0,
            0.0, 0.0, 1.0,   0.0, 0.0, 1.0,
            0.0, 0.0, 1.0,   0.0, 0.0, 1.0,
        ];
        let mdp = TabularMdp::new("chain", 3, 2, p, vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], 10).unwrap();
        let step = |s, a: usize, r| Step {
            state: State::Discrete(s),
            action: a,
            reward: r,
            behavior_prob: 0.5,
        };
        let data = Dataset {
            episodes: vec![
                Episode { steps: vec![step(0, 0, 1.0), step(1, 0, 3.0)] },
                Episode { steps: vec![step(0, 1, 2.0), step(1, 1, 4.0)] },
            ],
            provenance: Provenance {
                env_id: "chain".into(),
                policy_id: "uniform".into(),
                seed: 0,
            },
        };
        let pi_e = TabularPolicy::new("e", vec![vec![0.3, 0.7], vec![0.6, 0.4], vec![0.5, 0.5]]).unwrap();
        let est = model_based_estimate(&data, &pi_e, 3).unwrap();
        assert!((est - exact_return_dp(&mdp, &pi_e)).abs() < 1e-12, "{est}");
    }

    #[test]
    fn unvisited_pairs_used_by_target_stay_finite() {
        let stay = TabularPolicy::deterministic("stay", &[0, 0], 2);
        let switch = TabularPolicy::deterministic("switch", &[1, 1], 2);
        let data = sample_trajectories(&TabularMdp::two_state(), &stay, 10, 0).unwrap();
        let est = model_based_estimate(&data, &switch, 2).unwrap();
        assert!(est.is_finite());
        assert_eq!(est, 0.0);
    }

    #[test]
    fn abstracted_identity_matches_tabular() {
        let mdp = TabularMdp::two_state();
        let data = sample_trajectories(&mdp, &UniformPolicy::new(2), 500, 3).unwrap();
        let pi = TabularPolicy::random(2, 2, 3);
        let a = model_based_estimate(&data, &pi, 2).unwrap();
        let b = model_based_estimate_abstracted(&data, &pi, &Abstraction::identity(2)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
