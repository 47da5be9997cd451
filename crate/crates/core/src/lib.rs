//! Off-policy evaluation with abstract reward processes (ARPs).
//!
//! The crate is organised the way the data flows through an experiment:
//!
//! * [`env`]: tabular MDPs, CartPole, policies, trajectory sampling and the
//!   exact dynamic-programming oracle.
//! * [`abstraction`]: maps from states to a finite set of abstract states,
//!   including k-means clustering of logged states.
//! * [`arp`]: the abstract reward process type, its exact construction from a
//!   tabular MDP and its evaluation by linear solve or rollout.
//! * [`estimators`]: importance weights, the weighted maximum-likelihood ARP
//!   estimator and the IS / model-based baselines.
//! * [`harness`]: trial orchestration, `(|Z|, c)` sweeps and CSV summaries.

pub mod abstraction;
pub mod arp;
pub mod env;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod rng;

pub use error::{Error, Result};
