//! Off-policy estimators: STAR (weighted MLE of an ARP) and the baselines.

mod importance;
mod model_based;
mod star;
mod weights;

pub use importance::{is_estimate, pdis_estimate, wis_estimate, wpdis_estimate};
pub use model_based::{model_based_estimate, model_based_estimate_abstracted};
pub use star::{estimate_arp_off_policy, estimate_arp_on_policy, fit_arp_off_policy, star_estimate, StarConfig, StarFit};
pub use weights::{compute_weights, Clip, WeightTable, SUPPORT_FLOOR};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Stable estimator identifiers used in CSV files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorId {
    Star,
    Is,
    Pdis,
    Wis,
    Wpdis,
    MBased,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 6] = [
        EstimatorId::Star,
        EstimatorId::Is,
        EstimatorId::Pdis,
        EstimatorId::Wis,
        EstimatorId::Wpdis,
        EstimatorId::MBased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::Star => "star",
            EstimatorId::Is => "is",
            EstimatorId::Pdis => "pdis",
            EstimatorId::Wis => "wis",
            EstimatorId::Wpdis => "wpdis",
            EstimatorId::MBased => "mbased",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        EstimatorId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_are_stable() {
        let names: Vec<&str> = EstimatorId::ALL.iter().map(|e| e.as_str()).collect();
        assert_eq!(names, ["star", "is", "pdis", "wis", "wpdis", "mbased"]);
        for id in EstimatorId::ALL {
            assert_eq!(id.as_str().parse::<EstimatorId>().unwrap(), id);
        }
        assert!("dr".parse::<EstimatorId>().is_err());
    }
}
