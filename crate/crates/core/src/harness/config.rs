use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{EnvSpec, PolicySpec};
use crate::error::{Error, Result};
use crate::estimators::{Clip, EstimatorId};

/// k-means settings shared by every fitted abstraction in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbstractionSettings {
    pub standardize: bool,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for AbstractionSettings {
    fn default() -> Self {
        Self {
            standardize: false,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// One experiment: a grid of STAR configurations plus baselines, repeated
/// over dataset sizes and trials.
///
/// ```toml
/// env = "cartpole"
/// behavior = "uniform"
/// evaluation = "lean"
/// sizes = [100, 1000]
/// num_abstract = [2, 4, 8]
/// clip = [1, 2, "unclipped"]
/// trials = 50
/// seed = 7
/// out_dir = "runs/cartpole"
///
/// [abstraction]
/// standardize = false
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub env: String,
    pub behavior: String,
    pub evaluation: String,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub num_abstract: Vec<usize>,
    #[serde(default)]
    pub clip: Vec<Clip>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorId>,
    /// On-policy episodes for the Monte Carlo truth of non-tabular environments.
    #[serde(default = "default_truth_episodes")]
    pub truth_episodes: usize,
    #[serde(default)]
    pub abstraction: AbstractionSettings,
}

fn default_trials() -> usize {
    200
}

fn default_estimators() -> Vec<EstimatorId> {
    EstimatorId::ALL.to_vec()
}

fn default_truth_episodes() -> usize {
    1_000_000
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    pub fn env_spec(&self) -> Result<EnvSpec> {
        self.env.parse()
    }

    pub fn behavior_spec(&self) -> Result<PolicySpec> {
        self.behavior.parse()
    }

    pub fn evaluation_spec(&self) -> Result<PolicySpec> {
        self.evaluation.parse()
    }

    pub fn runs(&self, estimator: EstimatorId) -> bool {
        self.estimators.contains(&estimator)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.env_spec()?;
        self.behavior_spec()?;
        self.evaluation_spec()?;
        if self.trials < 2 {
            return bad("trials must be at least 2");
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be a non-empty list of positive dataset sizes");
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sizes must be strictly increasing");
        }
        if self.estimators.is_empty() {
            return bad("estimators must not be empty");
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return bad("estimators must not repeat");
        }
        let needs_grid = self.runs(EstimatorId::Star) || (self.runs(EstimatorId::MBased) && self.env_spec()?.tabular().is_none());
        if needs_grid && (self.num_abstract.is_empty() || self.num_abstract.contains(&0)) {
            return bad("num_abstract must be a non-empty list of positive sizes");
        }
        if self.runs(EstimatorId::Star) && self.clip.is_empty() {
            return bad("clip must not be empty when star runs");
        }
        if has_duplicates(&self.num_abstract) || has_duplicates(&self.clip) {
            return bad("grids must not repeat values");
        }
        if self.env_spec()?.tabular().is_none() && self.truth_episodes < 2 {
            return bad("truth_episodes must be at least 2");
        }
        if !(self.abstraction.tol >= 0.0) || self.abstraction.max_iters == 0 {
            return bad("abstraction needs max_iters >= 1 and tol >= 0");
        }
        Ok(())
    }
}

fn has_duplicates<T: Ord + Clone>(v: &[T]) -> bool {
    let mut s = v.to_vec();
    s.sort();
    s.windows(2).any(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
env = "two_state"
behavior = "uniform"
evaluation = "always:action=1"
sizes = [10, 100]
num_abstract = [1, 2]
clip = [1, "unclipped"]
trials = 2
out_dir = "out"
"#;

    #[test]
    fn parses_with_defaults() {
        let c = SweepConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.clip, vec![Clip::Window(1), Clip::Unclipped]);
        assert_eq!(c.estimators, EstimatorId::ALL.to_vec());
        assert_eq!(c.seed, 0);
        assert_eq!(c.truth_episodes, 1_000_000);
        assert!(!c.abstraction.standardize);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = SweepConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(SweepConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn nested_section_and_estimator_names() {
        let text = format!("{MINIMAL}estimators = [\"star\", \"wpdis\"]\n[abstraction]\nstandardize = true\n");
        let c = SweepConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.estimators, vec![EstimatorId::Star, EstimatorId::Wpdis]);
        assert!(c.abstraction.standardize);
    }

    #[test]
    fn rejects_invalid_configs() {
        for (from, to) in [
            ("trials = 2", "trials = 1"),
            ("sizes = [10, 100]", "sizes = [100, 10]"),
            ("sizes = [10, 100]", "sizes = []"),
            ("clip = [1, \"unclipped\"]", "clip = [0]"),
            ("clip = [1, \"unclipped\"]", "clip = []"),
            ("num_abstract = [1, 2]", "num_abstract = []"),
            ("env = \"two_state\"", "env = \"nowhere\""),
            ("trials = 2", "trials = 2\ncolour = 3"),
        ] {
            assert!(SweepConfig::from_toml_str(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }
}
