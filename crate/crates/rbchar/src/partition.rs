//! Index-set partitions: sequential blocks, seeded K-means clusters,
//! within-cluster distance bands and the covering-number cardinality bound.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::CovBand;
use crate::error::{Error, Result};

const MAX_LLOYD_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// 0-based cluster label per observation index.
    pub assignments: Vec<usize>,
    /// Observation indices of every block, ascending.
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_assignments(assignments: Vec<usize>, k: usize) -> Self {
        let mut blocks = vec![Vec::new(); k];
        for (i, &c) in assignments.iter().enumerate() {
            blocks[c].push(i);
        }
        Self { assignments, blocks }
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }
}

/// Contiguous blocks; a trailing block shorter than 3 joins its predecessor.
pub fn sequential_blocks(n_total: usize, block_size: usize) -> Result<Partition> {
    if block_size == 0 || block_size > n_total {
        return Err(Error::Input(format!(
            "block size {block_size} must lie in 1..={n_total}"
        )));
    }
    let mut k = n_total / block_size;
    let rem = n_total % block_size;
    if rem >= 3 || (rem > 0 && k == 0) {
        k += 1;
    }
    let assignments = (0..n_total).map(|i| (i / block_size).min(k - 1)).collect();
    Ok(Partition::from_assignments(assignments, k))
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sqdist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn recompute_centroids(points: &[Vec<f64>], labels: &[usize], k: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            for v in s.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    (sums, counts)
}

/// Within-cluster sum of squares.
pub fn wcss(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(labels).map(|(p, &c)| sqdist(p, &centroids[c])).sum()
}

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sqdist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sqdist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Result of Lloyd iterations, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    /// WCSS after every assignment step.
    pub objective_trace: Vec<f64>,
}

pub fn kmeans_partition(locations: &[Vec<f64>], k: usize, min_size: usize, seed: u64) -> Result<Partition> {
    kmeans_fit(locations, k, min_size, seed).map(|f| f.partition)
}

/// k-means++ seeding, Lloyd iterations to a fixpoint (at most 100), then
/// dissolution of clusters smaller than `min_size` into the nearest survivors.
pub fn kmeans_fit(locations: &[Vec<f64>], k: usize, min_size: usize, seed: u64) -> Result<KMeansFit> {
    let n = locations.len();
    if k == 0 || n == 0 {
        return Err(Error::Input("K-means needs K >= 1 and at least one location".into()));
    }
    if k.saturating_mul(min_size.max(1)) > n {
        return Err(Error::Input(format!(
            "{k} clusters of at least {min_size} points infeasible with {n} locations"
        )));
    }
    let dim = locations[0].len();
    if locations.iter().any(|p| p.len() != dim) {
        return Err(Error::Input("locations have mixed dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(locations, k, &mut rng);
    let mut labels: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let new: Vec<usize> = locations.par_iter().map(|p| nearest(p, &centroids).0).collect();
        let changed = new != labels;
        labels = new;
        trace.push(wcss(locations, &labels, &centroids));
        if !changed {
            break;
        }
        let (sums, counts) = recompute_centroids(locations, &labels, centroids.len(), dim);
        for (c, s) in sums.into_iter().enumerate() {
            if counts[c] > 0 {
                centroids[c] = s;
            }
        }
    }

    // drop empties, then dissolve undersized clusters smallest first
    loop {
        let (_, counts) = recompute_centroids(locations, &labels, centroids.len(), dim);
        let victim = counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c < min_size.max(1))
            .min_by_key(|&(i, &c)| (c, i))
            .map(|(i, _)| i);
        let Some(v) = victim else { break };
        if centroids.len() == 1 {
            return Err(Error::Input("no cluster satisfies the minimum size".into()));
        }
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == v).collect();
        centroids.remove(v);
        for l in labels.iter_mut() {
            if *l > v {
                *l -= 1;
            }
        }
        for &i in &members {
            labels[i] = nearest(&locations[i], &centroids).0;
        }
        let (sums, counts) = recompute_centroids(locations, &labels, centroids.len(), dim);
        for (c, s) in sums.into_iter().enumerate() {
            if counts[c] > 0 {
                centroids[c] = s;
            }
        }
    }
    let k_final = centroids.len();
    let partition = Partition::from_assignments(labels, k_final);
    Ok(KMeansFit { partition, centroids, objective_trace: trace })
}

/// Distance bands of one cluster set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandColumn {
    pub h_lo: f64,
    pub h_hi: f64,
    /// One band per cluster, in cluster order.
    pub clusters: Vec<CovBand>,
    pub valid: bool,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    sqdist(a, b).sqrt()
}

/// Bin all within-cluster unordered pairs by distance. A band empty in
/// more than half of the clusters is marked invalid.
pub fn distance_bands(locations: &[Vec<f64>], partition: &Partition, boundaries: &[f64]) -> Result<Vec<BandColumn>> {
    if boundaries.len() < 2 || boundaries[0] < 0.0 || boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("band boundaries must be ascending, nonnegative, at least two".into()));
    }
    let nb = boundaries.len() - 1;
    let per_cluster: Vec<Vec<Vec<(usize, usize)>>> = partition
        .blocks
        .par_iter()
        .map(|members| {
            let mut bands = vec![Vec::new(); nb];
            for (x, &a) in members.iter().enumerate() {
                for &b in &members[x + 1..] {
                    let d = euclid(&locations[a], &locations[b]);
                    let pos = boundaries.partition_point(|&h| h <= d);
                    if pos >= 1 && pos <= nb {
                        bands[pos - 1].push((a.min(b), a.max(b)));
                    }
                }
            }
            bands
        })
        .collect();
    let k = partition.k();
    Ok((0..nb)
        .map(|bi| {
            let clusters: Vec<CovBand> = per_cluster
                .iter()
                .map(|c| CovBand { h_lo: boundaries[bi], h_hi: boundaries[bi + 1], pairs: c[bi].clone() })
                .collect();
            let empty = clusters.iter().filter(|b| b.pairs.is_empty()).count();
            BandColumn {
                h_lo: boundaries[bi],
                h_hi: boundaries[bi + 1],
                valid: 2 * empty <= k,
                clusters,
            }
        })
        .collect())
}

/// Lower bound on the number of points per cell from the ε-ball cover.
pub fn min_points_per_cell(volume: f64, epsilon: f64, p: u32) -> Result<f64> {
    if epsilon <= 0.0 || p == 0 {
        return Err(Error::Input("epsilon must be > 0 and p >= 1".into()));
    }
    let half = p as f64 / 2.0;
    Ok(volume / epsilon.powi(p as i32) * statrs::function::gamma::gamma(half + 1.0) / PI.powf(half))
}
