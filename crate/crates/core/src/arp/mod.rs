//! Abstract reward processes: finite Markov reward processes over abstract
//! states, with per-state termination probabilities.

mod ground_truth;
mod io;
mod rollout;
mod solve;
mod stats;

pub use ground_truth::ground_truth_arp;
pub use io::{read_arp, read_arp_file, write_arp, write_arp_file};
pub use rollout::{arp_rollout_return, RolloutResult};
pub use solve::lu_solve;
pub use stats::{ArpFit, ArpStats};

use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-10;

/// `(P, R, eta, beta)` over `num_abstract` abstract states.
///
/// A visit to `z` earns `R[z]`, then ends the episode with probability
/// `beta[z]` and otherwise moves to `z'` with probability `P[z][z']`. This is
/// the absorbing-state formulation with the absorbing column folded into
/// `beta`. Abstract states never seen (`visited[z] == false`) self-loop with
/// zero reward and zero initial mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Arp {
    num_abstract: usize,
    /// Row-major `[z][z']`.
    p: Vec<f64>,
    r: Vec<f64>,
    eta: Vec<f64>,
    beta: Vec<f64>,
    visited: Vec<bool>,
}

impl Arp {
    pub fn new(p: Vec<Vec<f64>>, r: Vec<f64>, eta: Vec<f64>, beta: Vec<f64>, visited: Vec<bool>) -> Result<Self> {
        let n = r.len();
        let bad = |m: String| Err(Error::InvalidModel(m));
        if n == 0 {
            return bad("an ARP needs at least one abstract state".into());
        }
        if p.len() != n || p.iter().any(|row| row.len() != n) || eta.len() != n || beta.len() != n || visited.len() != n {
            return bad(format!("ARP components disagree on |Z| = {n}"));
        }
        for (z, row) in p.iter().enumerate() {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) || (row.iter().sum::<f64>() - 1.0).abs() > TOLERANCE {
                return bad(format!("transition row {z} is not a probability vector"));
            }
        }
        if eta.iter().any(|v| !(0.0..=1.0).contains(v)) || (eta.iter().sum::<f64>() - 1.0).abs() > TOLERANCE {
            return bad("initial distribution is not a probability vector".into());
        }
        if beta.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return bad("termination probabilities must lie in [0, 1]".into());
        }
        if r.iter().any(|v| !v.is_finite()) {
            return bad("rewards must be finite".into());
        }
        for z in (0..n).filter(|&z| !visited[z]) {
            if p[z][z] != 1.0 || r[z] != 0.0 || eta[z] != 0.0 {
                return bad(format!("unvisited abstract state {z} must self-loop with zero reward and zero initial mass"));
            }
        }
        Ok(Self {
            num_abstract: n,
            p: p.into_iter().flatten().collect(),
            r,
            eta,
            beta,
            visited,
        })
    }

    pub fn num_abstract(&self) -> usize {
        self.num_abstract
    }

    pub fn p(&self, z: usize, z2: usize) -> f64 {
        self.p[z * self.num_abstract + z2]
    }

    pub fn p_row(&self, z: usize) -> &[f64] {
        &self.p[z * self.num_abstract..(z + 1) * self.num_abstract]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.r
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn visited(&self) -> &[bool] {
        &self.visited
    }

    /// Expected return `eta^T (I - (I - diag(beta)) P)^{-1} R`, by LU solve.
    pub fn expected_return(&self) -> Result<f64> {
        let n = self.num_abstract;
        let mut a = vec![0.0; n * n];
        for z in 0..n {
            let keep = 1.0 - self.beta[z];
            for z2 in 0..n {
                a[z * n + z2] = -keep * self.p(z, z2);
            }
            a[z * n + z] += 1.0;
        }
        let values = lu_solve(&mut a, self.r.clone())?;
        Ok(self.eta.iter().zip(&values).map(|(e, v)| e * v).sum())
    }

    /// The same process with abstract states renamed by `perm` (old `z` becomes `perm[z]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_abstract;
        let mut p = vec![vec![0.0; n]; n];
        let (mut r, mut eta, mut beta, mut visited) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![false; n]);
        for z in 0..n {
            for z2 in 0..n {
                p[perm[z]][perm[z2]] = self.p(z, z2);
            }
            r[perm[z]] = self.r[z];
            eta[perm[z]] = self.eta[z];
            beta[perm[z]] = self.beta[z];
            visited[perm[z]] = self.visited[z];
        }
        Arp::new(p, r, eta, beta, visited)
    }
}

/// Closed-form expected return of `arp`.
pub fn arp_expected_return(arp: &Arp) -> Result<f64> {
    arp.expected_return()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn chain() -> Arp {
        Arp::new(
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![true, true],
        )
        .unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(chain().expected_return().unwrap(), 1.0);

        let zero = Arp::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![0.0, 0.0], vec![0.3, 0.7], vec![0.2, 0.4], vec![true; 2]).unwrap();
        assert_eq!(zero.expected_return().unwrap(), 0.0);

        for (r, b) in [(1.0, 0.5), (3.0, 0.25), (-2.0, 0.1), (0.7, 1.0)] {
            let one = Arp::new(vec![vec![1.0]], vec![r], vec![1.0], vec![b], vec![true]).unwrap();
            // Geometric series sum_k (1 - b)^k r.
            assert!((one.expected_return().unwrap() - r / b).abs() <= 1e-12);
        }
    }

    #[test]
    fn non_terminating_is_an_error() {
        let arp = Arp::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0], vec![true; 2]).unwrap();
        let err = arp.expected_return().unwrap_err();
        assert!(err.to_string().contains("non-terminating ARP"));
    }

    #[test]
    fn rejects_invalid_components() {
        assert!(Arp::new(vec![vec![0.5]], vec![0.0], vec![1.0], vec![0.5], vec![true]).is_err());
        assert!(Arp::new(vec![vec![1.0]], vec![0.0], vec![0.9], vec![0.5], vec![true]).is_err());
        assert!(Arp::new(vec![vec![1.0]], vec![0.0], vec![1.0], vec![1.5], vec![true]).is_err());
        // Unvisited states must carry the hardcoded values.
        assert!(Arp::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![true, false]).is_err());
    }

    fn random_arp() -> impl Strategy<Value = Arp> {
        (1usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n),
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(0.01f64..1.0, n),
                prop::collection::vec(0.05f64..1.0, n),
            )
                .prop_map(|(p, r, eta, beta)| {
                    let norm = |v: Vec<f64>| {
                        let s: f64 = v.iter().sum();
                        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
                    };
                    let n = r.len();
                    Arp::new(p.into_iter().map(norm).collect(), r, norm(eta), beta, vec![true; n]).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn return_is_invariant_to_relabelling(arp in random_arp(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut perm: Vec<usize> = (0..arp.num_abstract()).collect();
            perm.shuffle(&mut crate::rng::stream(seed, 0));
            let a = arp.expected_return().unwrap();
            let b = arp.relabel(&perm).unwrap().expected_return().unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn closed_form_matches_truncated_series(arp in random_arp()) {
            let n = arp.num_abstract();
            let mut d = arp.eta().to_vec();
            let mut total = 0.0;
            for _ in 0..5000 {
                total += d.iter().zip(arp.rewards()).map(|(x, r)| x * r).sum::<f64>();
                let mut next = vec![0.0; n];
                for z in 0..n {
                    for z2 in 0..n {
                        next[z2] += d[z] * (1.0 - arp.beta()[z]) * arp.p(z, z2);
                    }
                }
                d = next;
            }
            let j = arp.expected_return().unwrap();
            prop_assert!((j - total).abs() <= 1e-8 * (1.0 + j.abs()), "{} vs {}", j, total);
        }
    }
}
