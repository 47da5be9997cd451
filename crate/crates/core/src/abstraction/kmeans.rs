//! Lloyd's algorithm with random distinct-point initialisation.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    /// Standardise each feature to zero mean and unit variance first.
    pub standardize: bool,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
            standardize: false,
        }
    }
}

/// Per-feature affine standardisation `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaling {
    fn fit(points: &[Vec<f64>]) -> Self {
        let dim = points[0].len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; dim];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for p in points {
            for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Centroids in the (possibly standardised) feature space.
    pub centroids: Vec<Vec<f64>>,
    pub scaling: Option<Scaling>,
    /// Final nearest-centroid label of every input point.
    pub labels: Vec<usize>,
    /// Inertia after each assignment step, ending with the final assignment.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().expect("at least one assignment")
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the closest centroid; ties go to the lower index.
pub(crate) fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, f64) {
    let (labels, dists): (Vec<usize>, Vec<f64>) = points.par_iter().map(|p| nearest(centroids, p)).unzip();
    // Sequential sum keeps the inertia independent of the thread count.
    let inertia = dists.iter().sum();
    (labels, dists, inertia)
}

fn distinct_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let cmp = |a: &usize, b: &usize| {
        points[*a]
            .iter()
            .zip(&points[*b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    order.sort_by(cmp);
    order.dedup_by(|a, b| cmp(a, b).is_eq());
    order
}

/// Clusters `points` into `k` groups.
///
/// Centroids start at `k` distinct input points drawn uniformly without
/// replacement. A centroid that loses all its points is moved onto the point
/// farthest from its current centroid.
pub fn kmeans_fit(points: &[Vec<f64>], k: usize, options: &KMeansOptions) -> Result<KMeansFit> {
    if points.is_empty() {
        return Err(Error::EmptyInput("k-means needs at least one point"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k-means needs k >= 1".into()));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("k-means points must share a positive dimension".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("k-means points must be finite".into()));
    }

    let scaling = options.standardize.then(|| Scaling::fit(points));
    let scaled;
    let points = match &scaling {
        Some(s) => {
            scaled = points
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    s.apply(&mut q);
                    q
                })
                .collect::<Vec<_>>();
            &scaled[..]
        }
        None => points,
    };

    let distinct = distinct_indices(points);
    if distinct.len() < k {
        return Err(Error::InsufficientDistinctStates {
            distinct: distinct.len(),
            requested: k,
        });
    }
    let mut rng = stream(options.seed, 0);
    let mut centroids: Vec<Vec<f64>> = sample(&mut rng, distinct.len(), k)
        .into_iter()
        .map(|i| points[distinct[i]].clone())
        .collect();

    let mut inertia_history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iters {
        let (labels, mut dists, inertia) = assign(points, &centroids);
        inertia_history.push(inertia);
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let new = if counts[j] > 0 {
                sums[j].iter().map(|s| s / counts[j] as f64).collect()
            } else {
                let (far, _) = dists
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
                dists[far] = f64::NEG_INFINITY;
                points[far].clone()
            };
            shift = shift.max(sq_dist(&centroids[j], &new).sqrt());
            centroids[j] = new;
        }
        if shift < options.tol {
            converged = true;
            break;
        }
    }
    let (labels, _, inertia) = assign(points, &centroids);
    inertia_history.push(inertia);

    Ok(KMeansFit {
        centroids,
        scaling,
        labels,
        inertia_history,
        iterations,
        converged,
    })
}
