//! Environments, policies, logged data and the exact return oracle.

mod cartpole;
mod catalog;
mod dp;
mod io;
pub(crate) use io::fmt_real as io_fmt_real;
mod policy;
mod sampling;
mod tabular;

pub use cartpole::CartPole;
pub use catalog::{EnvSpec, PolicySpec};
pub use dp::{exact_return_dp, forward_state_masses};
pub use io::{read_dataset, read_dataset_file, write_dataset, write_dataset_file, DATASET_SCHEMA};
pub use policy::{sample_action, LeanPolicy, Policy, TabularPolicy, UniformPolicy};
pub use sampling::{monte_carlo_return, sample_episode, sample_trajectories, McEstimate};
pub use tabular::{RandomMdpParams, TabularMdp};

use crate::rng::StarRng;

/// An environment state as it appears in logged data.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl State {
    /// The state index of a tabular state.
    ///
    /// # Panics
    /// On a continuous state; tabular code paths require tabular data.
    pub fn index(&self) -> usize {
        match self {
            State::Discrete(s) => *s,
            State::Continuous(_) => panic!("expected a discrete state, found a continuous one"),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, State::Discrete(_))
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            State::Discrete(s) => write!(f, "{s}"),
            State::Continuous(x) => write!(f, "{x:?}"),
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub next: State,
    pub reward: f64,
    pub terminated: bool,
}

/// Episodic environment with a hard horizon cap.
///
/// Implementations are immutable; all randomness comes from the stream passed
/// in, so a shared environment can be sampled from many threads.
pub trait Environment: Send + Sync {
    fn id(&self) -> String;
    fn num_actions(&self) -> usize;
    fn horizon_cap(&self) -> usize;
    /// Number of states for tabular environments.
    fn num_states(&self) -> Option<usize> {
        None
    }
    fn reset(&self, rng: &mut StarRng) -> State;
    fn step(&self, state: &State, action: usize, rng: &mut StarRng) -> Outcome;
}

/// One logged decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: State,
    pub action: usize,
    pub reward: f64,
    /// Probability the behavior policy assigned to `action` at logging time.
    pub behavior_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<Step>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub env_id: String,
    pub policy_id: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub episodes: Vec<Episode>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        self.episodes.iter().map(Episode::len).sum()
    }

    /// Mean undiscounted return over episodes.
    pub fn mean_return(&self) -> f64 {
        let total: f64 = self.episodes.iter().map(Episode::total_reward).sum();
        total / self.episodes.len() as f64
    }

    pub fn states(&self) -> impl Iterator<Item = &State> {
        self.episodes.iter().flat_map(|e| e.steps.iter().map(|s| &s.state))
    }

    /// Copy of the dataset with every reward multiplied by `factor`.
    pub fn scale_rewards(&self, factor: f64) -> Dataset {
        let mut out = self.clone();
        for step in out.episodes.iter_mut().flat_map(|e| e.steps.iter_mut()) {
            step.reward *= factor;
        }
        out
    }
}
