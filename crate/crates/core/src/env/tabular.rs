use rand::seq::index::sample;
use rand::Rng;

use super::{Environment, Outcome, State};
use crate::error::{Error, Result};
use crate::rng::StarRng;

const TOLERANCE: f64 = 1e-12;

/// Finite MDP with undiscounted, finite-horizon returns.
///
/// `termination[s]` is the probability that the episode ends upon entering
/// `s`; an entry of 1 makes `s` absorbing. Independently of that, every
/// episode ends after `horizon_cap` decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    id: String,
    num_states: usize,
    num_actions: usize,
    /// Row-major `[s][a][s']`.
    transition: Vec<f64>,
    /// Row-major `[s][a]`.
    reward: Vec<f64>,
    initial_dist: Vec<f64>,
    termination: Vec<f64>,
    horizon_cap: usize,
}

/// Parameters of the random MDP generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMdpParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Maximum number of successor states per `(s, a)`.
    pub max_branching: usize,
}

impl TabularMdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial_dist: Vec<f64>,
        termination: Vec<f64>,
        horizon_cap: usize,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if num_states == 0 || num_actions == 0 || horizon_cap == 0 {
            return bad("state count, action count and horizon must be positive".into());
        }
        if transition.len() != num_states * num_actions * num_states {
            return bad(format!("transition tensor has {} entries", transition.len()));
        }
        if reward.len() != num_states * num_actions {
            return bad(format!("reward matrix has {} entries", reward.len()));
        }
        if initial_dist.len() != num_states || termination.len() != num_states {
            return bad("initial distribution and termination need one entry per state".into());
        }
        for (row, probs) in transition.chunks(num_states).enumerate() {
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad(format!("transition row {row} has an entry outside [0, 1]"));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > TOLERANCE {
                return bad(format!("transition row (s, a) = ({}, {}) sums to {sum}", row / num_actions, row % num_actions));
            }
        }
        if initial_dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (initial_dist.iter().sum::<f64>() - 1.0).abs() > TOLERANCE {
            return bad("initial distribution is not a probability vector".into());
        }
        if termination.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("termination probabilities must lie in [0, 1]".into());
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return bad("rewards must be finite".into());
        }
        Ok(Self {
            id: id.into(),
            num_states,
            num_actions,
            transition,
            reward,
            initial_dist,
            termination,
            horizon_cap,
        })
    }

    /// Two states; action 0 stays, action 1 switches. Reward 1 for acting in
    /// state 1, start in state 0, two decisions per episode.
    pub fn two_state() -> Self {
        #[rustfmt::skip]
        let transition = vec![
            1.0, 0.0,   0.0, 1.0,
            0.0, 1.0,   1.0, 0.0,
        ];
        Self::new("two_state", 2, 2, transition, vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0], 2)
            .expect("two-state MDP is valid")
    }

    /// Random sparse MDP. Some states terminate on entry with probability 1,
    /// others with a small probability, the rest never.
    pub fn random(params: RandomMdpParams, seed: u64) -> Self {
        let RandomMdpParams {
            num_states: ns,
            num_actions: na,
            horizon,
            max_branching,
        } = params;
        let mut rng = crate::rng::stream(seed, 0);
        let mut transition = vec![0.0; ns * na * ns];
        for row in transition.chunks_mut(ns) {
            let k = rng.gen_range(1..=max_branching.clamp(1, ns));
            let succ = sample(&mut rng, ns, k);
            let weights: Vec<f64> = (0..k).map(|_| 0.1 + rng.gen::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            for (s2, w) in succ.iter().zip(&weights) {
                row[s2] = w / total;
            }
        }
        let reward = (0..ns * na).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let termination = (0..ns)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < 0.15 {
                    1.0
                } else if u < 0.5 {
                    rng.gen_range(0.0..0.3)
                } else {
                    0.0
                }
            })
            .collect();
        let starts = rng.gen_range(1..=ns.min(3));
        let mut initial_dist = vec![0.0; ns];
        let picks = sample(&mut rng, ns, starts);
        let weights: Vec<f64> = (0..starts).map(|_| 0.1 + rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        for (s, w) in picks.iter().zip(&weights) {
            initial_dist[s] = w / total;
        }
        let id = format!("random_mdp:states={ns},actions={na},horizon={horizon},branching={max_branching},seed={seed}");
        Self::new(id, ns, na, transition, reward, initial_dist, termination, horizon).expect("generated MDP is valid")
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon_cap(&self) -> usize {
        self.horizon_cap
    }

    pub fn transition(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + s2]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn termination(&self) -> &[f64] {
        &self.termination
    }

    /// Same MDP with every reward multiplied by `factor`.
    pub fn with_scaled_rewards(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.reward.iter_mut().for_each(|r| *r *= factor);
        out
    }

    /// Same MDP with all rewards zero.
    pub fn with_zero_rewards(&self) -> Self {
        let mut out = self.clone();
        out.reward.iter_mut().for_each(|r| *r = 0.0);
        out
    }
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

impl Environment for TabularMdp {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn horizon_cap(&self) -> usize {
        self.horizon_cap
    }

    fn num_states(&self) -> Option<usize> {
        Some(self.num_states)
    }

    fn reset(&self, rng: &mut StarRng) -> State {
        State::Discrete(draw(&self.initial_dist, rng))
    }

    fn step(&self, state: &State, action: usize, rng: &mut StarRng) -> Outcome {
        let s = state.index();
        let next = draw(self.transition_row(s, action), rng);
        let terminated = rng.gen::<f64>() < self.termination[next];
        Outcome {
            next: State::Discrete(next),
            reward: self.reward(s, action),
            terminated,
        }
    }
}
