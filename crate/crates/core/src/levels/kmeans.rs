//! Seeded Lloyd's k-means with k-means++ starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 5,
            restarts: 25,
            max_iter: 300,
            tolerance: 1e-8,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.restarts == 0 || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "k, restarts and max_iter must be positive".into(),
            ));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be nonnegative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<const D: usize> {
    pub centroids: Vec<[f64; D]>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Index of the restart that produced this fit.
    pub restart: usize,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
}

impl<const D: usize> KMeansFit<D> {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest<const D: usize>(p: &[f64; D], centroids: &[[f64; D]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus<const D: usize>(points: &[[f64; D]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; D]> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random_range(0.0..total);
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[next];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign<const D: usize>(points: &[[f64; D]], centroids: &[[f64; D]], out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (slot, p) in out.iter_mut().zip(points) {
        let (j, d) = nearest(p, centroids);
        *slot = j;
        inertia += d;
    }
    inertia
}

fn lloyd<const D: usize>(
    points: &[[f64; D]],
    config: &KMeansConfig,
    seed: u64,
    restart: usize,
) -> KMeansFit<D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let k = config.k;
    let mut centroids = plus_plus(points, k, &mut rng);
    let mut assignments = vec![0; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        history.push(assign(points, &centroids, &mut assignments));

        let mut sums = vec![[0.0; D]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut updated: Vec<[f64; D]> = sums
            .iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    *old
                } else {
                    s.map(|v| v / n as f64)
                }
            })
            .collect();

        // an empty cluster takes over the point worst served by its centroid
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far = points
                .iter()
                .enumerate()
                .filter(|&(i, _)| counts[assignments[i]] > 1)
                .max_by(|(i, p), (l, q)| {
                    dist2(p, &updated[assignments[*i]])
                        .total_cmp(&dist2(q, &updated[assignments[*l]]))
                        .then(l.cmp(i))
                })
                .map(|(i, _)| i);
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                assignments[i] = j;
                counts[j] = 1;
                updated[j] = points[i];
            }
        }

        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < config.tolerance {
            break;
        }
    }

    let inertia = assign(points, &centroids, &mut assignments);
    history.push(inertia);
    KMeansFit {
        centroids,
        assignments,
        inertia,
        iterations,
        restart,
        history,
    }
}

/// Best of `config.restarts` runs, by inertia and then restart index.
///
/// Each restart draws from its own stream of a generator seeded with `seed`,
/// so the result does not depend on scheduling.
pub fn kmeans<const D: usize>(
    points: &[[f64; D]],
    config: &KMeansConfig,
    seed: u64,
) -> Result<KMeansFit<D>> {
    config.validate()?;
    if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(i));
    }
    if points.len() < config.k {
        return Err(Error::Clustering(format!(
            "{} points cannot form {} clusters",
            points.len(),
            config.k
        )));
    }

    let run = |restart| lloyd(points, config, seed, restart);
    #[cfg(feature = "parallel")]
    let fits: Vec<KMeansFit<D>> = {
        use rayon::prelude::*;
        (0..config.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<KMeansFit<D>> = (0..config.restarts).map(run).collect();

    let best = fits
        .into_iter()
        .filter(|f| f.cluster_sizes().iter().all(|&n| n > 0))
        .min_by(|a, b| a.inertia.total_cmp(&b.inertia).then(a.restart.cmp(&b.restart)));
    best.ok_or_else(|| {
        Error::Clustering(format!(
            "no restart produced {} nonempty clusters",
            config.k
        ))
    })
}
