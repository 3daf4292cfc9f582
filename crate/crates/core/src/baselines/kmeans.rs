//! Lloyd's k-means with k-means++ seeding and random restarts.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ClusterLabels;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { max_iters: 100, restarts: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: ClusterLabels,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroids.
    pub cost: f64,
    /// Cost after every assignment step of the winning restart.
    pub cost_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // Every point already coincides with a centroid.
            Err(_) => rng.random_range(0..n),
        };
        let c = points[next].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid for every point, lowest index on ties.
fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut cost = 0.0;
    for ((p, l), d) in points.iter().zip(labels.iter_mut()).zip(dists.iter_mut()) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centroids.iter().enumerate() {
            let dist = sq_dist(p, c);
            if dist < best.1 {
                best = (j, dist);
            }
        }
        *l = best.0;
        *d = best.1;
        cost += best.1;
    }
    cost
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iters: usize, rng: &mut impl Rng) -> KMeansResult {
    let n = points.len();
    let dim = points[0].len();
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();
    let mut prev_labels = Vec::new();
    for _ in 0..max_iters.max(1) {
        let cost = assign(points, &centroids, &mut labels, &mut dists);
        trace.push(cost);
        if labels == prev_labels {
            break;
        }
        prev_labels.clone_from(&labels);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sizes[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            if sizes[j] == 0 {
                // Move the point farthest from its centroid into the empty
                // cluster; its own cluster keeps at least one other member.
                let (far, _) = dists
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| sizes[labels[i]] > 1)
                    .fold((usize::MAX, -1.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
                if far == usize::MAX {
                    continue;
                }
                let old = labels[far];
                sizes[old] -= 1;
                for (s, x) in sums[old].iter_mut().zip(&points[far]) {
                    *s -= x;
                }
                labels[far] = j;
                dists[far] = 0.0;
                sizes[j] = 1;
                sums[j].clone_from(&points[far]);
            }
        }
        for j in 0..k {
            if sizes[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / sizes[j] as f64).collect();
            }
        }
    }
    let cost = *trace.last().unwrap_or(&0.0);
    KMeansResult {
        labels: ClusterLabels::new(labels, k).expect("labels below k"),
        centroids,
        cost,
        cost_trace: trace,
    }
}

/// Clusters dense row vectors. Returns the restart with the lowest cost,
/// the earliest one on ties.
pub fn kmeans(points: &[Vec<f64>], k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Config("k-means needs k >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::Config(format!("k-means with k = {k} needs at least {k} points, got {}", points.len())));
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::Dimension { expected: dim, found: bad.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts.max(1) {
        let run = lloyd(points, k, cfg.max_iters, &mut rng);
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
