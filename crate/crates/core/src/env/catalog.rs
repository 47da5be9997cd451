//! Named environments and policies, addressable from config files and the CLI.
//!
//! Specs are written `kind` or `kind:key=value,key=value`, e.g.
//! `random_mdp:states=5,actions=2,horizon=20,branching=3,seed=7` or
//! `mixed:seed=3,epsilon=0.2`. The canonical string doubles as the id stored
//! in dataset headers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{CartPole, Environment, LeanPolicy, Policy, RandomMdpParams, TabularMdp, TabularPolicy, UniformPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    TwoState,
    RandomMdp { params: RandomMdpParams, seed: u64 },
    CartPole { horizon: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Uniform,
    Always { action: usize },
    Mixed { seed: u64, epsilon: f64 },
    Random { seed: u64 },
    Lean { left: f64, right: f64 },
}

fn split_spec(s: &str) -> Result<(&str, BTreeMap<&str, &str>)> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut params = BTreeMap::new();
    for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value in {s:?}, found {kv:?}")))?;
        params.insert(k.trim(), v.trim());
    }
    Ok((kind.trim(), params))
}

struct Params<'a> {
    spec: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl Params<'_> {
    fn get<T: FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T> {
        match self.map.remove(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key} in {:?}", self.spec))),
            None => default.ok_or_else(|| Error::InvalidArgument(format!("{:?} needs {key}", self.spec))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::InvalidArgument(format!("unknown parameter {k} in {:?}", self.spec))),
            None => Ok(()),
        }
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, map) = split_spec(s)?;
        let mut p = Params { spec: s, map };
        let spec = match kind {
            "two_state" => EnvSpec::TwoState,
            "random_mdp" => {
                let params = RandomMdpParams {
                    num_states: p.get("states", None)?,
                    num_actions: p.get("actions", Some(2))?,
                    horizon: p.get("horizon", Some(20))?,
                    max_branching: p.get("branching", Some(3))?,
                };
                if params.num_states == 0 || params.num_actions == 0 || params.horizon == 0 {
                    return Err(Error::InvalidArgument(format!("{s:?}: sizes must be positive")));
                }
                EnvSpec::RandomMdp {
                    params,
                    seed: p.get("seed", Some(0))?,
                }
            }
            "cartpole" => EnvSpec::CartPole {
                horizon: p.get("horizon", Some(50))?,
            },
            other => return Err(Error::InvalidArgument(format!("unknown environment {other:?}"))),
        };
        p.finish()?;
        Ok(spec)
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::TwoState => write!(f, "two_state"),
            EnvSpec::RandomMdp { params, seed } => write!(
                f,
                "random_mdp:states={},actions={},horizon={},branching={},seed={seed}",
                params.num_states, params.num_actions, params.horizon, params.max_branching
            ),
            EnvSpec::CartPole { horizon: 50 } => write!(f, "cartpole"),
            EnvSpec::CartPole { horizon } => write!(f, "cartpole:horizon={horizon}"),
        }
    }
}

impl EnvSpec {
    /// The tabular model, when the environment has one.
    pub fn tabular(&self) -> Option<TabularMdp> {
        match self {
            EnvSpec::TwoState => Some(TabularMdp::two_state()),
            EnvSpec::RandomMdp { params, seed } => Some(TabularMdp::random(*params, *seed)),
            EnvSpec::CartPole { .. } => None,
        }
    }

    pub fn build(&self) -> Box<dyn Environment> {
        match self {
            EnvSpec::CartPole { horizon } => Box::new(CartPole::with_horizon(*horizon)),
            _ => Box::new(self.tabular().expect("tabular spec")),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, map) = split_spec(s)?;
        let mut p = Params { spec: s, map };
        let spec = match kind {
            "uniform" => PolicySpec::Uniform,
            "always" => PolicySpec::Always {
                action: p.get("action", None)?,
            },
            "mixed" => {
                let epsilon: f64 = p.get("epsilon", Some(0.2))?;
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(Error::InvalidArgument(format!("{s:?}: epsilon must lie in [0, 1]")));
                }
                PolicySpec::Mixed {
                    seed: p.get("seed", Some(0))?,
                    epsilon,
                }
            }
            "random" => PolicySpec::Random {
                seed: p.get("seed", Some(0))?,
            },
            "lean" => {
                let left: f64 = p.get("left", Some(0.1))?;
                let right: f64 = p.get("right", Some(0.9))?;
                if !(0.0..=1.0).contains(&left) || !(0.0..=1.0).contains(&right) {
                    return Err(Error::InvalidArgument(format!("{s:?}: probabilities must lie in [0, 1]")));
                }
                PolicySpec::Lean { left, right }
            }
            other => return Err(Error::InvalidArgument(format!("unknown policy {other:?}"))),
        };
        p.finish()?;
        Ok(spec)
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Uniform => write!(f, "uniform"),
            PolicySpec::Always { action } => write!(f, "always:action={action}"),
            PolicySpec::Mixed { seed, epsilon } => write!(f, "mixed:seed={seed},epsilon={epsilon}"),
            PolicySpec::Random { seed } => write!(f, "random:seed={seed}"),
            PolicySpec::Lean { left, right } => write!(f, "lean:left={left},right={right}"),
        }
    }
}

impl PolicySpec {
    /// Instantiates the policy for `env`.
    pub fn build(&self, env: &dyn Environment) -> Result<Box<dyn Policy>> {
        let na = env.num_actions();
        let tabular = |what: &str| {
            env.num_states()
                .ok_or_else(|| Error::InvalidArgument(format!("{what} policies need a tabular environment")))
        };
        Ok(match self {
            PolicySpec::Uniform => Box::new(UniformPolicy::new(na)),
            PolicySpec::Always { action } => {
                if *action >= na {
                    return Err(Error::InvalidArgument(format!("action {action} out of range")));
                }
                let ns = tabular("always")?;
                Box::new(TabularPolicy::deterministic(self.to_string(), &vec![*action; ns], na))
            }
            PolicySpec::Mixed { seed, epsilon } => Box::new(TabularPolicy::mixed(tabular("mixed")?, na, *seed, *epsilon)),
            PolicySpec::Random { seed } => Box::new(TabularPolicy::random(tabular("random")?, na, *seed)),
            PolicySpec::Lean { left, right } => {
                if env.num_states().is_some() || na != 2 {
                    return Err(Error::InvalidArgument("lean policy needs CartPole".into()));
                }
                Box::new(LeanPolicy {
                    p_right_when_left: *left,
                    p_right_when_right: *right,
                })
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip_through_display() {
        for s in [
            "two_state",
            "cartpole",
            "cartpole:horizon=20",
            "random_mdp:states=5,actions=3,horizon=20,branching=2,seed=9",
        ] {
            let spec: EnvSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.build().id(), s);
        }
        for s in ["uniform", "always:action=1", "mixed:seed=3,epsilon=0.2", "random:seed=4", "lean:left=0.9,right=0.1"] {
            let spec: PolicySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn built_ids_match_specs() {
        let env = EnvSpec::from_str("random_mdp:states=4").unwrap().build();
        for s in ["uniform", "always:action=1", "mixed:seed=3,epsilon=0.2", "random:seed=4"] {
            assert_eq!(PolicySpec::from_str(s).unwrap().build(env.as_ref()).unwrap().id(), s);
        }
        let cart = EnvSpec::CartPole { horizon: 50 }.build();
        assert_eq!(PolicySpec::from_str("lean").unwrap().build(cart.as_ref()).unwrap().id(), "lean:left=0.1,right=0.9");
    }

    #[test]
    fn rejects_unknown_or_incomplete_specs() {
        assert!("pendulum".parse::<EnvSpec>().is_err());
        assert!("random_mdp".parse::<EnvSpec>().is_err());
        assert!("random_mdp:states=4,colour=red".parse::<EnvSpec>().is_err());
        assert!("always".parse::<PolicySpec>().is_err());
        assert!("mixed:epsilon=2".parse::<PolicySpec>().is_err());
        let cart = EnvSpec::CartPole { horizon: 50 }.build();
        assert!(PolicySpec::Random { seed: 0 }.build(cart.as_ref()).is_err());
    }
}
