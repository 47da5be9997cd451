use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::{Dataset, Policy};
use crate::error::{Error, Result};

/// Behavior probabilities below this count as zero when `pi_e` is positive.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// How many of the most recent per-step ratios enter an importance weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Clip {
    /// `rho_{(t-c+1)^+:t}`: the last `c` ratios, `c >= 1`.
    Window(usize),
    /// Full product `rho_{0:t}`.
    Unclipped,
}

impl Clip {
    pub fn window(c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidArgument("clip window must be at least 1".into()));
        }
        Ok(Clip::Window(c))
    }

    /// Window length as a number, `None` when unclipped.
    pub fn as_option(self) -> Option<usize> {
        match self {
            Clip::Unclipped => None,
            Clip::Window(c) => Some(c),
        }
    }
}

impl fmt::Display for Clip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clip::Unclipped => f.write_str("unclipped"),
            Clip::Window(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Clip {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unclipped" | "none" | "inf" => Ok(Clip::Unclipped),
            _ => s
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("clip must be a positive integer or `unclipped`, got {s:?}")))
                .and_then(Clip::window),
        }
    }
}

impl Serialize for Clip {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Clip::Window(c) => serializer.serialize_u64(*c as u64),
            Clip::Unclipped => serializer.serialize_str("unclipped"),
        }
    }
}

impl<'de> Deserialize<'de> for Clip {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ClipVisitor;

        impl Visitor<'_> for ClipVisitor {
            type Value = Clip;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"unclipped\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Clip, E> {
                Clip::window(v as usize).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Clip, E> {
                if v < 1 {
                    return Err(E::custom("clip window must be at least 1"));
                }
                self.visit_u64(v as u64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Clip, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ClipVisitor)
    }
}

/// Per-episode, per-step importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub weights: Vec<Vec<f64>>,
    pub clip: Clip,
    pub max: f64,
    /// Kish effective sample size over all `(episode, step)` weights.
    pub effective_sample_size: f64,
}

pub(crate) fn step_ratios(data: &Dataset, pi_e: &dyn Policy) -> Result<Vec<Vec<f64>>> {
    data.episodes
        .iter()
        .enumerate()
        .map(|(i, ep)| {
            ep.steps
                .iter()
                .enumerate()
                .map(|(t, step)| {
                    let b = step.behavior_prob;
                    if !(b > 0.0 && b <= 1.0) {
                        return Err(Error::InvalidProbability { episode: i, step: t, value: b });
                    }
                    let e = pi_e.prob(&step.state, step.action);
                    if !(0.0..=1.0).contains(&e) {
                        return Err(Error::InvalidProbability { episode: i, step: t, value: e });
                    }
                    if e > 0.0 && b < SUPPORT_FLOOR {
                        return Err(Error::SupportViolation {
                            episode: i,
                            step: t,
                            pi_e: e,
                            behavior_prob: b,
                        });
                    }
                    Ok(e / b)
                })
                .collect()
        })
        .collect()
}

fn window_products(ratios: &[f64], clip: Clip) -> Vec<f64> {
    match clip {
        Clip::Unclipped => ratios
            .iter()
            .scan(1.0, |acc, r| {
                *acc *= r;
                Some(*acc)
            })
            .collect(),
        Clip::Window(c) => (0..ratios.len())
            .map(|t| ratios[(t + 1).saturating_sub(c)..=t].iter().product())
            .collect(),
    }
}

/// Importance weights of every logged step for evaluating `pi_e`.
pub fn compute_weights(data: &Dataset, pi_e: &dyn Policy, clip: Clip) -> Result<WeightTable> {
    let weights: Vec<Vec<f64>> = step_ratios(data, pi_e)?
        .iter()
        .map(|r| window_products(r, clip))
        .collect();
    let all = weights.iter().flatten();
    let max = all.clone().copied().fold(0.0, f64::max);
    let (sum, sum_sq) = all.fold((0.0, 0.0), |(s, q), w| (s + w, q + w * w));
    Ok(WeightTable {
        weights,
        clip,
        max,
        effective_sample_size: if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 },
    })
}
