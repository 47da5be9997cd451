use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SweepConfig;
use crate::abstraction::{fit_on_dataset, Abstraction, KMeansOptions};
use crate::env::{exact_return_dp, monte_carlo_return, sample_trajectories, Dataset, EnvSpec, Environment, Policy, TabularMdp};
use crate::error::{Error, Result};
use crate::estimators::{
    is_estimate, model_based_estimate, model_based_estimate_abstracted, pdis_estimate, star_estimate, wis_estimate, wpdis_estimate, Clip,
    EstimatorId, StarConfig,
};
use crate::rng::{derive_seed, hash_str};

/// The evaluation policy's true expected return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub value: f64,
    /// Zero for exact dynamic programming.
    pub stderr: f64,
    /// Monte Carlo episodes, zero for exact dynamic programming.
    pub episodes: usize,
}

/// Exact for tabular environments, Monte Carlo otherwise. A Monte Carlo
/// truth must have a standard error below 1% of its magnitude.
pub fn compute_truth(env: &EnvSpec, pi_e: &dyn Policy, episodes: usize, seed: u64) -> Result<Truth> {
    if let Some(mdp) = env.tabular() {
        return Ok(Truth {
            value: exact_return_dp(&mdp, pi_e),
            stderr: 0.0,
            episodes: 0,
        });
    }
    let mc = monte_carlo_return(env.build().as_ref(), pi_e, episodes, seed)?;
    if !(mc.stderr < 0.01 * mc.mean.abs()) {
        return Err(Error::NoisyOracle {
            truth: mc.mean,
            stderr: mc.stderr,
        });
    }
    Ok(Truth {
        value: mc.mean,
        stderr: mc.stderr,
        episodes,
    })
}

/// Grid coordinates of an estimate; both are empty for plain baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub num_abstract: Option<usize>,
    pub clip: Option<Clip>,
}

impl Cell {
    pub const NONE: Cell = Cell {
        num_abstract: None,
        clip: None,
    };

    pub fn star(num_abstract: usize, clip: Clip) -> Self {
        Cell {
            num_abstract: Some(num_abstract),
            clip: Some(clip),
        }
    }
}

/// One row of the trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub estimator: EstimatorId,
    pub num_abstract: Option<usize>,
    pub clip_c: Option<Clip>,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub estimate: f64,
    pub truth: f64,
    pub sq_error: f64,
}

impl TrialResult {
    pub fn new(estimator: EstimatorId, cell: Cell, n: usize, trial: usize, seed: u64, estimate: f64, truth: f64) -> Self {
        let d = estimate - truth;
        TrialResult {
            estimator,
            num_abstract: cell.num_abstract,
            clip_c: cell.clip,
            n,
            trial,
            seed,
            estimate,
            truth,
            sq_error: d * d,
        }
    }

    pub fn cell(&self) -> Cell {
        Cell {
            num_abstract: self.num_abstract,
            clip: self.clip_c,
        }
    }
}

/// An estimate that could not be produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Empty when the whole trial failed before any estimator ran.
    pub estimator: Option<EstimatorId>,
    pub num_abstract: Option<usize>,
    pub clip_c: Option<Clip>,
    pub n: usize,
    pub trial: usize,
    pub error: String,
}

/// Everything one `(n, trial)` job produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JobOutput {
    pub results: Vec<TrialResult>,
    pub failures: Vec<Failure>,
}

/// A validated sweep configuration with its environment, policies and truth.
pub struct Experiment {
    config: SweepConfig,
    env: Box<dyn Environment>,
    tabular: Option<TabularMdp>,
    behavior: Box<dyn Policy>,
    evaluation: Box<dyn Policy>,
    truth: Truth,
}

impl Experiment {
    /// Builds the experiment and computes its truth.
    pub fn new(config: SweepConfig) -> Result<Self> {
        config.validate()?;
        let env = config.env_spec()?;
        let pi_e = config.evaluation_spec()?.build(env.build().as_ref())?;
        let truth = compute_truth(&env, pi_e.as_ref(), config.truth_episodes, truth_seed(&config))?;
        Self::with_truth(config, truth)
    }

    /// Builds the experiment around a previously computed truth.
    pub fn with_truth(config: SweepConfig, truth: Truth) -> Result<Self> {
        config.validate()?;
        let spec = config.env_spec()?;
        let env = spec.build();
        let behavior = config.behavior_spec()?.build(env.as_ref())?;
        let evaluation = config.evaluation_spec()?.build(env.as_ref())?;
        Ok(Experiment {
            tabular: spec.tabular(),
            env,
            behavior,
            evaluation,
            truth,
            config,
        })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.config
    }

    pub fn truth(&self) -> Truth {
        self.truth
    }

    /// Seed of the dataset shared by every estimator in trial `trial` at size `n`.
    pub fn dataset_seed(&self, n: usize, trial: usize) -> u64 {
        derive_seed(&[self.config.seed, hash_str(&self.config.env), n as u64, trial as u64])
    }

    pub fn sample(&self, n: usize, trial: usize) -> Result<Dataset> {
        sample_trajectories(self.env.as_ref(), self.behavior.as_ref(), n, self.dataset_seed(n, trial))
    }

    /// Every `(estimator, cell)` pair the sweep evaluates, in output order.
    pub fn cells(&self) -> Vec<(EstimatorId, Cell)> {
        let mut cells = Vec::new();
        for &est in &self.config.estimators {
            match est {
                EstimatorId::Star => {
                    for &k in &self.config.num_abstract {
                        for &c in &self.config.clip {
                            cells.push((est, Cell::star(k, c)));
                        }
                    }
                }
                EstimatorId::MBased if self.tabular.is_none() => {
                    for &k in &self.config.num_abstract {
                        cells.push((
                            est,
                            Cell {
                                num_abstract: Some(k),
                                clip: None,
                            },
                        ));
                    }
                }
                _ => cells.push((est, Cell::NONE)),
            }
        }
        cells
    }

    /// `|Z| = 1` is the single-state abstraction and `|Z| = |S|` on a tabular
    /// environment is the identity; everything else is k-means on the
    /// dataset's states.
    pub fn abstraction(&self, data: &Dataset, num_abstract: usize, dataset_seed: u64) -> Result<Abstraction> {
        if num_abstract == 1 {
            return Ok(Abstraction::single());
        }
        if let Some(mdp) = &self.tabular {
            if num_abstract == mdp.num_states() {
                return Ok(Abstraction::identity(num_abstract));
            }
        }
        let options = KMeansOptions {
            seed: derive_seed(&[dataset_seed, num_abstract as u64]),
            max_iters: self.config.abstraction.max_iters,
            tol: self.config.abstraction.tol,
            standardize: self.config.abstraction.standardize,
        };
        Ok(fit_on_dataset(data, num_abstract, &options)?.0)
    }

    fn estimate(&self, data: &Dataset, estimator: EstimatorId, cell: Cell, phi: Option<&Abstraction>) -> Result<f64> {
        let pi_e = self.evaluation.as_ref();
        match estimator {
            EstimatorId::Star => {
                let phi = phi.expect("star needs an abstraction");
                let clip = cell.clip.expect("star needs a clip setting");
                star_estimate(
                    data,
                    &StarConfig {
                        abstraction: phi,
                        clip,
                        pi_e,
                    },
                )
            }
            EstimatorId::Is => is_estimate(data, pi_e),
            EstimatorId::Pdis => pdis_estimate(data, pi_e),
            EstimatorId::Wis => wis_estimate(data, pi_e),
            EstimatorId::Wpdis => wpdis_estimate(data, pi_e),
            EstimatorId::MBased => match (&self.tabular, phi) {
                (Some(mdp), _) => model_based_estimate(data, pi_e, mdp.num_states()),
                (None, Some(phi)) => model_based_estimate_abstracted(data, pi_e, phi),
                (None, None) => Err(Error::InvalidArgument("model-based estimate on a continuous state space needs a discretization".into())),
            },
        }
    }

    /// One estimator on one cell: samples the trial's dataset, fits the
    /// abstraction if needed and compares the estimate to the truth.
    pub fn run_trial(&self, estimator: EstimatorId, cell: Cell, n: usize, trial: usize) -> Result<TrialResult> {
        let wrap = |e: Error| Error::Trial {
            n,
            trial,
            source: Box::new(e),
        };
        let seed = self.dataset_seed(n, trial);
        let data = self.sample(n, trial).map_err(wrap)?;
        let phi = match cell.num_abstract {
            Some(k) => Some(self.abstraction(&data, k, seed).map_err(wrap)?),
            None => None,
        };
        let estimate = self.estimate(&data, estimator, cell, phi.as_ref()).map_err(wrap)?;
        Ok(TrialResult::new(estimator, cell, n, trial, seed, estimate, self.truth.value))
    }

    /// Every cell of the sweep on trial `trial` at size `n`, sharing one
    /// dataset and one abstraction per `|Z|`.
    pub fn run_job(&self, n: usize, trial: usize) -> JobOutput {
        let seed = self.dataset_seed(n, trial);
        let failure = |estimator, cell: Cell, e: &Error| Failure {
            estimator,
            num_abstract: cell.num_abstract,
            clip_c: cell.clip,
            n,
            trial,
            error: e.to_string(),
        };
        let data = match self.sample(n, trial) {
            Ok(d) => d,
            Err(e) => {
                return JobOutput {
                    results: Vec::new(),
                    failures: vec![failure(None, Cell::NONE, &e)],
                }
            }
        };
        let cells = self.cells();
        let mut sizes: Vec<usize> = cells.iter().filter_map(|(_, c)| c.num_abstract).collect();
        sizes.sort();
        sizes.dedup();
        let fits: Vec<(usize, Result<Abstraction>)> = sizes.par_iter().map(|&k| (k, self.abstraction(&data, k, seed))).collect();
        let outcomes: Vec<Result<f64>> = cells
            .par_iter()
            .map(|&(est, cell)| {
                let phi = match cell.num_abstract {
                    Some(k) => match &fits.iter().find(|(size, _)| *size == k).expect("fitted").1 {
                        Ok(phi) => Some(phi),
                        Err(e) => return Err(Error::InvalidArgument(format!("abstraction with {k} states: {e}"))),
                    },
                    None => None,
                };
                self.estimate(&data, est, cell, phi)
            })
            .collect();
        let mut out = JobOutput::default();
        for ((est, cell), outcome) in cells.into_iter().zip(outcomes) {
            match outcome {
                Ok(v) => out.results.push(TrialResult::new(est, cell, n, trial, seed, v, self.truth.value)),
                Err(e) => {
                    log::warn!("n={n} trial={trial} {est} {cell:?}: {e}");
                    out.failures.push(failure(Some(est), cell, &e));
                }
            }
        }
        out
    }
}

pub(crate) fn truth_seed(config: &SweepConfig) -> u64 {
    derive_seed(&[config.seed, hash_str("truth"), hash_str(&config.env), hash_str(&config.evaluation)])
}
