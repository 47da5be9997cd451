use rand::Rng;

use super::State;
use crate::error::{Error, Result};
use crate::rng::StarRng;

/// A state-conditional action distribution.
pub trait Policy: Send + Sync {
    fn id(&self) -> String;
    fn num_actions(&self) -> usize;
    fn prob(&self, state: &State, action: usize) -> f64;

    fn probs(&self, state: &State) -> Vec<f64> {
        (0..self.num_actions()).map(|a| self.prob(state, a)).collect()
    }
}

/// Draws an action and returns it with the probability the policy assigned to it.
pub fn sample_action(policy: &dyn Policy, state: &State, rng: &mut StarRng) -> Result<(usize, f64)> {
    let probs = policy.probs(state);
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::DegeneratePolicy {
            state: state.to_string(),
        });
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = a;
        if u < acc {
            return Ok((a, p));
        }
    }
    Ok((last, probs[last]))
}

/// Uniform over all actions, for any state space.
#[derive(Debug, Clone)]
pub struct UniformPolicy {
    num_actions: usize,
}

impl UniformPolicy {
    pub fn new(num_actions: usize) -> Self {
        assert!(num_actions > 0, "a policy needs at least one action");
        Self { num_actions }
    }
}

impl Policy for UniformPolicy {
    fn id(&self) -> String {
        "uniform".into()
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn prob(&self, _state: &State, action: usize) -> f64 {
        if action < self.num_actions {
            1.0 / self.num_actions as f64
        } else {
            0.0
        }
    }
}

/// Policy given by a `[|S|, |A|]` probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    id: String,
    table: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(id: impl Into<String>, table: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = table.first() else {
            return Err(Error::InvalidModel("policy table has no states".into()));
        };
        let num_actions = first.len();
        if num_actions == 0 {
            return Err(Error::InvalidModel("policy table has no actions".into()));
        }
        for (s, row) in table.iter().enumerate() {
            if row.len() != num_actions {
                return Err(Error::InvalidModel(format!("policy row {s} has {} entries, expected {num_actions}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidModel(format!("policy row {s} has an entry outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(Self { id: id.into(), table })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            id: "uniform".into(),
            table: vec![vec![p; num_actions]; num_states],
        }
    }

    /// Deterministic policy taking `actions[s]` in state `s`.
    pub fn deterministic(id: impl Into<String>, actions: &[usize], num_actions: usize) -> Self {
        let table = actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; num_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        Self { id: id.into(), table }
    }

    /// `(1 - epsilon)` on a seeded random greedy action plus `epsilon` spread uniformly.
    pub fn mixed(num_states: usize, num_actions: usize, seed: u64, epsilon: f64) -> Self {
        let mut rng = crate::rng::stream(seed, 0);
        let table = (0..num_states)
            .map(|_| {
                let greedy = rng.gen_range(0..num_actions);
                let mut row = vec![epsilon / num_actions as f64; num_actions];
                row[greedy] += 1.0 - epsilon;
                normalise(row)
            })
            .collect();
        Self {
            id: format!("mixed:seed={seed},epsilon={epsilon}"),
            table,
        }
    }

    /// Random stochastic policy with every probability at least `floor / |A|`.
    pub fn random(num_states: usize, num_actions: usize, seed: u64) -> Self {
        let mut rng = crate::rng::stream(seed, 1);
        let table = (0..num_states)
            .map(|_| normalise((0..num_actions).map(|_| 0.05 + rng.gen::<f64>()).collect()))
            .collect();
        Self {
            id: format!("random:seed={seed}"),
            table,
        }
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }
}

fn normalise(mut row: Vec<f64>) -> Vec<f64> {
    let sum: f64 = row.iter().sum();
    for p in &mut row {
        *p /= sum;
    }
    row
}

impl Policy for TabularPolicy {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn num_actions(&self) -> usize {
        self.table[0].len()
    }

    fn prob(&self, state: &State, action: usize) -> f64 {
        self.table[state.index()].get(action).copied().unwrap_or(0.0)
    }
}

/// CartPole policy conditioned on which way the pole leans.
///
/// Action 1 pushes the cart right. The pole leans left when its angle is
/// negative. The default pushes toward the lean with probability 0.9, which
/// balances the pole reasonably well.
#[derive(Debug, Clone, PartialEq)]
pub struct LeanPolicy {
    pub p_right_when_left: f64,
    pub p_right_when_right: f64,
}

impl Default for LeanPolicy {
    fn default() -> Self {
        Self {
            p_right_when_left: 0.1,
            p_right_when_right: 0.9,
        }
    }
}

impl Policy for LeanPolicy {
    fn id(&self) -> String {
        format!("lean:left={},right={}", self.p_right_when_left, self.p_right_when_right)
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn prob(&self, state: &State, action: usize) -> f64 {
        let State::Continuous(x) = state else {
            panic!("lean policy needs a CartPole state");
        };
        let p_right = if x[2] < 0.0 {
            self.p_right_when_left
        } else {
            self.p_right_when_right
        };
        match action {
            0 => 1.0 - p_right,
            1 => p_right,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    struct Dead;

    impl Policy for Dead {
        fn id(&self) -> String {
            "dead".into()
        }
        fn num_actions(&self) -> usize {
            2
        }
        fn prob(&self, _: &State, _: usize) -> f64 {
            0.0
        }
    }

    #[test]
    fn all_zero_policy_is_degenerate() {
        let err = sample_action(&Dead, &State::Discrete(0), &mut stream(0, 0)).unwrap_err();
        assert!(err.to_string().contains("degenerate policy"));
    }

    #[test]
    fn sampled_probability_matches_policy() {
        let pi = TabularPolicy::random(4, 3, 9);
        let mut rng = stream(1, 0);
        for s in 0..4 {
            let state = State::Discrete(s);
            for _ in 0..20 {
                let (a, p) = sample_action(&pi, &state, &mut rng).unwrap();
                assert_eq!(p, pi.prob(&state, a));
            }
        }
    }

    #[test]
    fn zero_probability_actions_are_never_drawn() {
        let pi = TabularPolicy::deterministic("d", &[1, 0], 3);
        let mut rng = stream(2, 0);
        for _ in 0..200 {
            assert_eq!(sample_action(&pi, &State::Discrete(0), &mut rng).unwrap().0, 1);
        }
    }

    #[test]
    fn generated_tables_are_stochastic() {
        for pi in [TabularPolicy::random(6, 3, 4), TabularPolicy::mixed(6, 3, 4, 0.3)] {
            for row in pi.table() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
        assert!(TabularPolicy::new("bad", vec![vec![0.5, 0.4]]).is_err());
    }

    #[test]
    fn lean_policy_pushes_toward_the_lean() {
        let pi = LeanPolicy::default();
        let left = State::Continuous(vec![0.0, 0.0, -0.01, 0.0]);
        let right = State::Continuous(vec![0.0, 0.0, 0.01, 0.0]);
        assert_eq!(pi.prob(&left, 1), 0.1);
        assert_eq!(pi.prob(&right, 1), 0.9);
        assert!((pi.probs(&left).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lean_policy_outlasts_uniform() {
        use crate::env::{monte_carlo_return, CartPole};
        let env = CartPole::default();
        let lean = monte_carlo_return(&env, &LeanPolicy::default(), 2000, 1).unwrap();
        let uniform = monte_carlo_return(&env, &UniformPolicy::new(2), 2000, 1).unwrap();
        assert!(lean.mean > uniform.mean + 5.0, "{} vs {}", lean.mean, uniform.mean);
    }
}
