//! State abstractions `phi: S -> Z` onto a finite set of abstract states.

mod io;
mod kmeans;
mod markov;

pub use io::{read_abstraction, read_abstraction_file, write_abstraction, write_abstraction_file};
pub use kmeans::{kmeans_fit, KMeansFit, KMeansOptions, Scaling};
pub use markov::markov_violation_score;

use crate::env::{Dataset, State};
use crate::error::{Error, Result};

/// How states are turned into feature vectors for centroid lookup.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoding {
    /// Continuous states are used as-is.
    Raw,
    /// Discrete state `s` becomes the unit vector `e_s` of this dimension.
    OneHot(usize),
}

impl Encoding {
    pub fn features(&self, state: &State) -> Vec<f64> {
        match (self, state) {
            (Encoding::Raw, State::Continuous(x)) => x.clone(),
            (Encoding::OneHot(dim), State::Discrete(s)) => {
                assert!(*s < *dim, "state {s} outside one-hot dimension {dim}");
                let mut v = vec![0.0; *dim];
                v[*s] = 1.0;
                v
            }
            (Encoding::Raw, State::Discrete(s)) => vec![*s as f64],
            (Encoding::OneHot(_), State::Continuous(_)) => panic!("one-hot encoding needs discrete states"),
        }
    }

    /// Encoding appropriate for the states found in `data`.
    pub fn for_dataset(data: &Dataset) -> Encoding {
        let mut max = None;
        for state in data.states() {
            match state {
                State::Continuous(_) => return Encoding::Raw,
                State::Discrete(s) => max = Some(max.map_or(*s, |m: usize| m.max(*s))),
            }
        }
        Encoding::OneHot(max.map_or(1, |m| m + 1))
    }
}

/// Nearest-centroid abstraction produced by k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidMap {
    pub centroids: Vec<Vec<f64>>,
    pub encoding: Encoding,
    /// Standardisation applied to features before the lookup.
    pub scaling: Option<Scaling>,
}

impl CentroidMap {
    pub fn nearest(&self, state: &State) -> usize {
        let mut x = self.encoding.features(state);
        if let Some(scaling) = &self.scaling {
            scaling.apply(&mut x);
        }
        kmeans::nearest(&self.centroids, &x).0
    }
}

/// A total, deterministic map from states to `0..num_abstract()`.
#[derive(Debug, Clone, PartialEq)]
pub enum Abstraction {
    Identity { num_states: usize },
    Single,
    Lookup { table: Vec<usize>, num_abstract: usize },
    Centroids(CentroidMap),
}

impl Abstraction {
    /// `phi(s) = s`; the abstract process is the MRP over states.
    pub fn identity(num_states: usize) -> Self {
        Abstraction::Identity { num_states }
    }

    /// Everything maps to abstract state 0.
    pub fn single() -> Self {
        Abstraction::Single
    }

    pub fn lookup(table: Vec<usize>, num_abstract: usize) -> Result<Self> {
        if num_abstract == 0 {
            return Err(Error::InvalidArgument("lookup abstraction needs at least one abstract state".into()));
        }
        if let Some(bad) = table.iter().find(|&&z| z >= num_abstract) {
            return Err(Error::InvalidArgument(format!("lookup entry {bad} is not below {num_abstract}")));
        }
        Ok(Abstraction::Lookup { table, num_abstract })
    }

    pub fn num_abstract(&self) -> usize {
        match self {
            Abstraction::Identity { num_states } => *num_states,
            Abstraction::Single => 1,
            Abstraction::Lookup { num_abstract, .. } => *num_abstract,
            Abstraction::Centroids(m) => m.centroids.len(),
        }
    }

    pub fn map(&self, state: &State) -> usize {
        match self {
            Abstraction::Identity { num_states } => {
                let s = state.index();
                assert!(s < *num_states, "state {s} outside identity abstraction over {num_states} states");
                s
            }
            Abstraction::Single => 0,
            Abstraction::Lookup { table, .. } => table[state.index()],
            Abstraction::Centroids(m) => m.nearest(state),
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            Abstraction::Identity { .. } => "identity",
            Abstraction::Single => "single",
            Abstraction::Lookup { .. } => "lookup",
            Abstraction::Centroids(_) => "centroids",
        }
    }

    /// Abstract-state sequences of every episode in `data`.
    pub fn apply(&self, data: &Dataset) -> Vec<Vec<usize>> {
        data.episodes
            .iter()
            .map(|e| e.steps.iter().map(|s| self.map(&s.state)).collect())
            .collect()
    }
}

/// Fits k-means on every logged state in `data` and wraps the result.
pub fn fit_on_dataset(data: &Dataset, k: usize, options: &KMeansOptions) -> Result<(Abstraction, KMeansFit)> {
    let encoding = Encoding::for_dataset(data);
    let points: Vec<Vec<f64>> = data.states().map(|s| encoding.features(s)).collect();
    let fit = kmeans_fit(&points, k, options)?;
    let abstraction = Abstraction::Centroids(CentroidMap {
        centroids: fit.centroids.clone(),
        encoding,
        scaling: fit.scaling.clone(),
    });
    Ok((abstraction, fit))
}
