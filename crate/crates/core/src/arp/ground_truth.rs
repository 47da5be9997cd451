use super::{Arp, ArpStats};
use crate::abstraction::Abstraction;
use crate::env::{forward_state_masses, Policy, State, TabularMdp};

/// The exact ARP of `policy` in `mdp` under `abstraction`.
///
/// Each abstract component is a ratio of expected sums over timesteps: e.g.
/// `P(z, z')` is the expected number of `z -> z'` transitions over the
/// expected number of non-final visits to `z`. Those expectations come from
/// the forward state distributions, so the result is exact up to rounding.
/// Termination on entering a state and the horizon cap both land in `beta`.
pub fn ground_truth_arp(mdp: &TabularMdp, policy: &dyn Policy, abstraction: &Abstraction) -> Arp {
    let masses = forward_state_masses(mdp, policy);
    let horizon = mdp.horizon_cap();
    let phi: Vec<usize> = (0..mdp.num_states()).map(|s| abstraction.map(&State::Discrete(s))).collect();
    let nz = abstraction.num_abstract();
    let mut stats = ArpStats::new(nz);
    for (s, &p0) in mdp.initial_dist().iter().enumerate() {
        if p0 > 0.0 {
            stats.start(phi[s], p0);
        }
    }
    for (t, d) in masses.iter().enumerate() {
        let last = t + 1 == horizon;
        for (s, &mass) in d.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let z = phi[s];
            let state = State::Discrete(s);
            for a in 0..mdp.num_actions() {
                let w = mass * policy.prob(&state, a);
                if w == 0.0 {
                    continue;
                }
                let reward = mdp.reward(s, a);
                if last {
                    stats.visit(z, w, reward, None);
                    continue;
                }
                // Split the visit by outcome so the sums carry the exact
                // continuing and terminating masses.
                stats.observed[z] = true;
                stats.mass[z] += w;
                stats.reward[z] += w * reward;
                for (s2, &p) in mdp.transition_row(s, a).iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let q = w * p;
                    let end = mdp.termination()[s2];
                    stats.terminal[z] += q * end;
                    stats.transition[z * nz + phi[s2]] += q * (1.0 - end);
                }
            }
        }
    }
    stats.finish().arp
}
