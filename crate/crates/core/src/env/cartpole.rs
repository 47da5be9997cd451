use rand::Rng;

use super::{Environment, Outcome, State};
use crate::rng::StarRng;

/// Cart-pole balancing with the classic physics constants and Euler steps.
///
/// State is `(x, x_dot, theta, theta_dot)`; action 0 pushes left, 1 pushes
/// right. Every step yields reward 1, including the failing one.
#[derive(Debug, Clone, PartialEq)]
pub struct CartPole {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub length: f64,
    pub force_mag: f64,
    pub tau: f64,
    pub theta_threshold: f64,
    pub x_threshold: f64,
    pub horizon: usize,
}

impl Default for CartPole {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            theta_threshold: 12.0 * 2.0 * std::f64::consts::PI / 360.0,
            x_threshold: 2.4,
            horizon: 50,
        }
    }
}

impl CartPole {
    pub fn with_horizon(horizon: usize) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    /// One Euler step of the dynamics.
    pub fn dynamics(&self, x: &[f64], action: usize) -> [f64; 4] {
        let [pos, vel, theta, omega] = [x[0], x[1], x[2], x[3]];
        let force = if action == 1 { self.force_mag } else { -self.force_mag };
        let total_mass = self.mass_cart + self.mass_pole;
        let pole_mass_length = self.mass_pole * self.length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_mass_length * omega * omega * sin) / total_mass;
        let theta_acc =
            (self.gravity * sin - cos * temp) / (self.length * (4.0 / 3.0 - self.mass_pole * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;
        [
            pos + self.tau * vel,
            vel + self.tau * x_acc,
            theta + self.tau * omega,
            omega + self.tau * theta_acc,
        ]
    }

    pub fn failed(&self, x: &[f64]) -> bool {
        x[0].abs() > self.x_threshold || x[2].abs() > self.theta_threshold
    }
}

impl Environment for CartPole {
    fn id(&self) -> String {
        if self.horizon == 50 {
            "cartpole".into()
        } else {
            format!("cartpole:horizon={}", self.horizon)
        }
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn horizon_cap(&self) -> usize {
        self.horizon
    }

    fn reset(&self, rng: &mut StarRng) -> State {
        State::Continuous((0..4).map(|_| rng.gen_range(-0.05..0.05)).collect())
    }

    fn step(&self, state: &State, action: usize, _rng: &mut StarRng) -> Outcome {
        let State::Continuous(x) = state else {
            panic!("CartPole states are continuous");
        };
        let next = self.dynamics(x, action);
        Outcome {
            terminated: self.failed(&next),
            next: State::Continuous(next.to_vec()),
            reward: 1.0,
        }
    }
}
