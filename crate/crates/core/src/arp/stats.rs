use super::Arp;

/// Weighted sufficient statistics of an ARP.
///
/// Every estimator (and the exact construction) reduces its input to these
/// sums; [`ArpStats::finish`] turns them into ratios and applies the
/// hardcoded values where a denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArpStats {
    n: usize,
    /// Abstract state appeared in the data at all (unweighted).
    pub observed: Vec<bool>,
    pub mass: Vec<f64>,
    pub terminal: Vec<f64>,
    pub reward: Vec<f64>,
    /// Row-major `[z][z']`.
    pub transition: Vec<f64>,
    pub initial: Vec<f64>,
}

/// ARP plus the abstract states whose weighted denominator was zero even
/// though they appear in the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ArpFit {
    pub arp: Arp,
    pub zero_weight_states: Vec<usize>,
}

impl ArpStats {
    pub fn new(num_abstract: usize) -> Self {
        let n = num_abstract;
        Self {
            n,
            observed: vec![false; n],
            mass: vec![0.0; n],
            terminal: vec![0.0; n],
            reward: vec![0.0; n],
            transition: vec![0.0; n * n],
            initial: vec![0.0; n],
        }
    }

    pub fn num_abstract(&self) -> usize {
        self.n
    }

    /// A visit to `z` with weight `w` earning `reward`; `next` is the
    /// successor, or `None` if the episode ended after this step.
    pub fn visit(&mut self, z: usize, w: f64, reward: f64, next: Option<usize>) {
        self.observed[z] = true;
        self.mass[z] += w;
        self.reward[z] += w * reward;
        match next {
            Some(z2) => self.transition[z * self.n + z2] += w,
            None => self.terminal[z] += w,
        }
    }

    pub fn start(&mut self, z: usize, w: f64) {
        self.initial[z] += w;
    }

    pub fn finish(self) -> ArpFit {
        let n = self.n;
        let mut p = vec![vec![0.0; n]; n];
        let mut r = vec![0.0; n];
        let mut beta = vec![1.0; n];
        let mut zero_weight_states = Vec::new();
        for z in 0..n {
            let row = &self.transition[z * n..(z + 1) * n];
            let continuing: f64 = row.iter().sum();
            if self.mass[z] > 0.0 {
                r[z] = self.reward[z] / self.mass[z];
                if continuing > 0.0 {
                    for (dst, &w) in p[z].iter_mut().zip(row) {
                        *dst = w / continuing;
                    }
                    beta[z] = (self.terminal[z] / self.mass[z]).clamp(0.0, 1.0);
                    continue;
                }
            } else if self.observed[z] {
                zero_weight_states.push(z);
            }
            p[z][z] = 1.0;
        }
        let total: f64 = self.initial.iter().sum();
        let eta: Vec<f64> = self.initial.iter().map(|w| w / total).collect();
        let arp = Arp::new(p, r, eta, beta, self.observed).expect("sufficient statistics yield a valid ARP");
        ArpFit { arp, zero_weight_states }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unvisited_and_zero_weight_states() {
        let mut s = ArpStats::new(3);
        s.start(0, 1.0);
        s.visit(0, 1.0, 2.0, Some(1));
        s.visit(1, 0.0, 5.0, None);
        let f = s.finish();
        assert_eq!(f.zero_weight_states, vec![1]);
        let arp = f.arp;
        assert_eq!(arp.visited(), &[true, true, false]);
        assert_eq!((arp.p(2, 2), arp.rewards()[2], arp.eta()[2]), (1.0, 0.0, 0.0));
        assert_eq!((arp.p(1, 1), arp.rewards()[1], arp.beta()[1]), (1.0, 0.0, 1.0));
        assert_eq!(arp.expected_return().unwrap(), 2.0);
    }

    #[test]
    fn all_terminal_visits_terminate() {
        let mut s = ArpStats::new(1);
        s.start(0, 1.0);
        s.visit(0, 1.0, 3.0, None);
        let arp = s.finish().arp;
        assert_eq!(arp.beta(), &[1.0]);
        assert_eq!(arp.expected_return().unwrap(), 3.0);
    }
}
