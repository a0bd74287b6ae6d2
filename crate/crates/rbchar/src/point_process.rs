//! Planar point patterns: generators and the CSR / stationarity detectors.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundState;
use crate::detect::{detect_strict_with, fold_statistics, DetectionReport, SupNorm, VerdictRule};
use crate::empirical::{integrated_g_discrepancy, nn_distances, nn_distances_grid};
use crate::error::{Error, Result};
use crate::gp::gp_sample;
use crate::kernels::CovKernel;
use crate::partition::{kmeans_partition, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Input(format!("window [{x0},{x1}]x[{y0},{y1}] has no area")));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, side, 0.0, side)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn expanded(&self, r: f64) -> Self {
        Self { x0: self.x0 - r, x1: self.x1 + r, y0: self.y0 - r, y1: self.y1 + r }
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> [f64; 2] {
        [rng.random_range(self.x0..self.x1), rng.random_range(self.y0..self.y1)]
    }

    /// Smallest window holding every point.
    pub fn bounding_box(points: &[[f64; 2]]) -> Result<Self> {
        let mut w = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in points {
            w[0] = w[0].min(p[0]);
            w[1] = w[1].max(p[0]);
            w[2] = w[2].min(p[1]);
            w[3] = w[3].max(p[1]);
        }
        Self::new(w[0], w[1], w[2], w[3])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointPattern {
    pub window: Window,
    pub points: Vec<[f64; 2]>,
    #[serde(skip)]
    nn: OnceLock<Vec<f64>>,
}

impl PartialEq for PointPattern {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.points == other.points
    }
}

impl PointPattern {
    pub fn new(window: Window, points: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !window.contains(**p)) {
            return Err(Error::Input(format!("point ({}, {}) outside the window", p[0], p[1])));
        }
        Ok(Self { window, points, nn: OnceLock::new() })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Nearest-neighbour distances, computed once.
    pub fn nn_distances(&self) -> Result<&[f64]> {
        if let Some(d) = self.nn.get() {
            return Ok(d);
        }
        let d = nn_distances_grid(&self.points)?;
        Ok(self.nn.get_or_init(|| d))
    }

    pub fn locations(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| vec![p[0], p[1]]).collect()
    }
}

pub fn intensity_mle(pattern: &PointPattern) -> Result<f64> {
    let a = pattern.window.area();
    if !(a > 0.0) {
        return Err(Error::Input("window has zero area".into()));
    }
    Ok(pattern.n() as f64 / a)
}

fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

fn hpp_points(lambda: f64, window: &Window, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = poisson_count(lambda * window.area(), rng);
    (0..n).map(|_| window.uniform(rng)).collect()
}

pub fn gen_hpp(lambda: f64, window: Window, seed: u64) -> Result<PointPattern> {
    if lambda < 0.0 {
        return Err(Error::Input("intensity must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointPattern::new(window, hpp_points(lambda, &window, &mut rng))
}

fn thin<F: Fn([f64; 2]) -> f64>(
    lambda_fn: &F,
    lambda_max: f64,
    window: &Window,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for p in hpp_points(lambda_max, window, rng) {
        let l = lambda_fn(p);
        if l > lambda_max * (1.0 + 1e-12) {
            return Err(Error::DominatingBound { value: l, bound: lambda_max });
        }
        let u: f64 = rng.random();
        if u * lambda_max < l {
            out.push(p);
        }
    }
    Ok(out)
}

/// Inhomogeneous Poisson process by thinning HPP(λ_max).
pub fn gen_ihpp<F: Fn([f64; 2]) -> f64>(lambda_fn: F, lambda_max: f64, window: Window, seed: u64) -> Result<PointPattern> {
    if lambda_max < 0.0 {
        return Err(Error::Input("dominating intensity must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointPattern::new(window, thin(&lambda_fn, lambda_max, &window, &mut rng)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterKind {
    /// Poisson(μ) offspring uniform in a disc of radius r.
    Matern { r: f64 },
    /// Poisson(μ) offspring from N(parent, σ² I).
    Thomas { sigma2: f64 },
    /// Exactly m offspring uniform in a disc of radius r.
    NeymanScott { m: usize, r: f64 },
}

impl ClusterKind {
    fn buffer(&self) -> f64 {
        match *self {
            ClusterKind::Matern { r } | ClusterKind::NeymanScott { r, .. } => r,
            ClusterKind::Thomas { sigma2 } => 4.0 * sigma2.sqrt(),
        }
    }
}

fn in_disc(c: [f64; 2], r: f64, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let rad = r * rng.random::<f64>().sqrt();
    let th = 2.0 * PI * rng.random::<f64>();
    [c[0] + rad * th.cos(), c[1] + rad * th.sin()]
}

/// Shot-noise cluster process. Parents come from (I)HPP(κ) on the window
/// grown by the cluster reach; offspring falling outside are discarded.
pub fn gen_cluster<K, M>(
    kind: ClusterKind,
    kappa: K,
    kappa_max: f64,
    mu: M,
    window: Window,
    seed: u64,
) -> Result<PointPattern>
where
    K: Fn([f64; 2]) -> f64,
    M: Fn([f64; 2]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = window.expanded(kind.buffer());
    let parents = thin(&kappa, kappa_max, &outer, &mut rng)?;
    let mut pts = Vec::new();
    for c in parents {
        match kind {
            ClusterKind::Matern { r } => {
                let n = poisson_count(mu(c), &mut rng);
                pts.extend((0..n).map(|_| in_disc(c, r, &mut rng)));
            }
            ClusterKind::NeymanScott { m, r } => {
                pts.extend((0..m).map(|_| in_disc(c, r, &mut rng)));
            }
            ClusterKind::Thomas { sigma2 } => {
                let n = poisson_count(mu(c), &mut rng);
                let nd = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::Input(e.to_string()))?;
                pts.extend((0..n).map(|_| [c[0] + nd.sample(&mut rng), c[1] + nd.sample(&mut rng)]));
            }
        }
    }
    pts.retain(|p| window.contains(*p));
    PointPattern::new(window, pts)
}

/// Constant-parameter convenience wrapper around [`gen_cluster`].
pub fn gen_cluster_const(kind: ClusterKind, kappa: f64, mu: f64, window: Window, seed: u64) -> Result<PointPattern> {
    gen_cluster(kind, |_| kappa, kappa, |_| mu, window, seed)
}

/// Log-Gaussian Cox process: log Λ = mean + GP on a `grid_res`² grid of cell
/// centres, points by thinning against the piecewise-constant intensity.
pub fn gen_lgcp<F: Fn([f64; 2]) -> f64>(
    mean_fn: F,
    kernel: &CovKernel,
    grid_res: usize,
    window: Window,
    seed: u64,
) -> Result<PointPattern> {
    if grid_res < 16 {
        return Err(Error::Input("LGCP grid needs at least 16 cells per axis".into()));
    }
    let dx = (window.x1 - window.x0) / grid_res as f64;
    let dy = (window.y1 - window.y0) / grid_res as f64;
    let centres: Vec<Vec<f64>> = (0..grid_res * grid_res)
        .map(|k| {
            let (i, j) = (k % grid_res, k / grid_res);
            vec![window.x0 + (i as f64 + 0.5) * dx, window.y0 + (j as f64 + 0.5) * dy]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gp_seed: u64 = rng.random();
    let z = gp_sample(kernel, &centres, gp_seed)?;
    let lam: Vec<f64> = centres
        .iter()
        .zip(&z)
        .map(|(c, z)| (mean_fn([c[0], c[1]]) + z).exp())
        .collect();
    let lmax = lam.iter().cloned().fold(0.0, f64::max);
    let cell_of = |p: [f64; 2]| {
        let i = (((p[0] - window.x0) / dx) as usize).min(grid_res - 1);
        let j = (((p[1] - window.y0) / dy) as usize).min(grid_res - 1);
        j * grid_res + i
    };
    let pts = thin(&|p| lam[cell_of(p)], lmax, &window, &mut rng)?;
    PointPattern::new(window, pts)
}

/// Uniform-grid spatial hash used by the Strauss sampler.
struct Hash {
    cell: f64,
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    cells: Vec<Vec<usize>>,
}

impl Hash {
    fn new(window: &Window, r: f64) -> Self {
        let cell = r.max(1e-9);
        let nx = (((window.x1 - window.x0) / cell).ceil() as usize).clamp(1, 4096);
        let ny = (((window.y1 - window.y0) / cell).ceil() as usize).clamp(1, 4096);
        let cell = ((window.x1 - window.x0) / nx as f64).max((window.y1 - window.y0) / ny as f64).max(cell);
        Self { cell, nx, ny, x0: window.x0, y0: window.y0, cells: vec![Vec::new(); nx * ny] }
    }

    fn key(&self, p: [f64; 2]) -> (usize, usize) {
        let i = (((p[0] - self.x0) / self.cell) as usize).min(self.nx - 1);
        let j = (((p[1] - self.y0) / self.cell) as usize).min(self.ny - 1);
        (i, j)
    }

    fn insert(&mut self, p: [f64; 2], idx: usize) {
        let (i, j) = self.key(p);
        self.cells[j * self.nx + i].push(idx);
    }

    fn remove(&mut self, p: [f64; 2], idx: usize) {
        let (i, j) = self.key(p);
        let c = &mut self.cells[j * self.nx + i];
        if let Some(pos) = c.iter().position(|&v| v == idx) {
            c.swap_remove(pos);
        }
    }

    fn rename(&mut self, p: [f64; 2], from: usize, to: usize) {
        let (i, j) = self.key(p);
        for v in self.cells[j * self.nx + i].iter_mut() {
            if *v == from {
                *v = to;
            }
        }
    }

    /// Points within distance r of p, excluding index `skip`.
    fn close(&self, pts: &[[f64; 2]], p: [f64; 2], r: f64, skip: usize) -> usize {
        let (i, j) = self.key(p);
        let mut n = 0;
        for gj in j.saturating_sub(1)..=(j + 1).min(self.ny - 1) {
            for gi in i.saturating_sub(1)..=(i + 1).min(self.nx - 1) {
                for &k in &self.cells[gj * self.nx + gi] {
                    if k != skip {
                        let q = pts[k];
                        if (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) <= r * r {
                            n += 1;
                        }
                    }
                }
            }
        }
        n
    }
}

/// Strauss process by birth-death-move Metropolis–Hastings from an empty start.
pub fn gen_strauss(beta: f64, gamma: f64, r: f64, window: Window, seed: u64, n_steps: usize) -> Result<PointPattern> {
    if gamma > 1.0 {
        return Err(Error::NonIntegrable(gamma));
    }
    if !(beta > 0.0) || gamma < 0.0 || r < 0.0 {
        return Err(Error::Input("Strauss needs beta > 0, 0 <= gamma <= 1, R >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = window.area();
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut hash = Hash::new(&window, r);
    let pow = |t: usize| if t == 0 { 1.0 } else { gamma.powi(t as i32) };
    for _ in 0..n_steps {
        let kind: f64 = rng.random();
        let u: f64 = rng.random();
        if kind < 1.0 / 3.0 {
            let p = window.uniform(&mut rng);
            let t = hash.close(&pts, p, r, usize::MAX);
            let ratio = beta * area * pow(t) / (pts.len() as f64 + 1.0);
            if u < ratio {
                hash.insert(p, pts.len());
                pts.push(p);
            }
        } else if kind < 2.0 / 3.0 {
            if pts.is_empty() {
                continue;
            }
            let i = rng.random_range(0..pts.len());
            let t = hash.close(&pts, pts[i], r, i);
            let ratio = pts.len() as f64 / (beta * area * pow(t));
            if u < ratio {
                let last = pts.len() - 1;
                hash.remove(pts[i], i);
                if i != last {
                    hash.rename(pts[last], last, i);
                }
                pts.swap_remove(i);
            }
        } else {
            if pts.is_empty() {
                continue;
            }
            let i = rng.random_range(0..pts.len());
            let p = window.uniform(&mut rng);
            let t_old = hash.close(&pts, pts[i], r, i);
            let t_new = hash.close(&pts, p, r, i);
            let ratio = if t_new <= t_old { 1.0 } else { pow(t_new - t_old) };
            if u < ratio {
                hash.remove(pts[i], i);
                pts[i] = p;
                hash.insert(p, i);
            }
        }
    }
    PointPattern::new(window, pts)
}

/// Count of unordered pairs closer than r (brute force).
pub fn close_pairs(points: &[[f64; 2]], r: f64) -> usize {
    let mut n = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d2 = (points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2);
            if d2 <= r * r {
                n += 1;
            }
        }
    }
    n
}

/// Quadrat-count dispersion index (variance / mean) over a side × side grid.
pub fn dispersion_index(pattern: &PointPattern, side: usize) -> f64 {
    let w = pattern.window;
    let mut counts = vec![0f64; side * side];
    for p in &pattern.points {
        let i = (((p[0] - w.x0) / (w.x1 - w.x0) * side as f64) as usize).min(side - 1);
        let j = (((p[1] - w.y0) / (w.y1 - w.y0) * side as f64) as usize).min(side - 1);
        counts[j * side + i] += 1.0;
    }
    let m = counts.iter().sum::<f64>() / counts.len() as f64;
    let v = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (counts.len() as f64 - 1.0);
    v / m
}

/// K-means clusters of the points (at least 3 per cluster).
pub fn cluster_pattern(pattern: &PointPattern, k: usize, seed: u64) -> Result<Partition> {
    if k < 2 {
        return Err(Error::Input("at least 2 clusters are required".into()));
    }
    if pattern.n() < 3 * k {
        return Err(Error::Input(format!("{} points cannot fill {k} clusters of 3", pattern.n())));
    }
    let part = kmeans_partition(&pattern.locations(), k, 3, seed)?;
    if part.k() < 2 {
        return Err(Error::Input("fewer than 2 clusters survived".into()));
    }
    Ok(part)
}

/// Nearest-neighbour distances computed inside each cluster.
pub fn within_cluster_nn(pattern: &PointPattern, partition: &Partition) -> Result<Vec<Vec<f64>>> {
    partition
        .blocks
        .par_iter()
        .map(|b| {
            let pts: Vec<[f64; 2]> = b.iter().map(|&i| pattern.points[i]).collect();
            nn_distances(&pts)
        })
        .collect()
}

pub fn csr_statistics(pattern: &PointPattern, partition: &Partition) -> Result<Vec<f64>> {
    let lambda = intensity_mle(pattern)?;
    within_cluster_nn(pattern, partition)?
        .iter()
        .map(|d| integrated_g_discrepancy(d, lambda))
        .collect()
}

/// CSR detector: per-cluster integrated gap between the within-cluster
/// nearest-neighbour ECDF and 1 − exp(−λ̃πx²) with the global λ̃.
pub fn detect_csr(pattern: &PointPattern, k: usize, bound: BoundState, rule: &VerdictRule, seed: u64) -> Result<DetectionReport> {
    let part = cluster_pattern(pattern, k, seed)?;
    let stats = csr_statistics(pattern, &part)?;
    let mut r = fold_statistics(&stats, bound, rule)?;
    r.seed = Some(seed);
    Ok(r)
}

/// Strict stationarity of the nearest-neighbour distance marks over K-means clusters.
pub fn detect_pp_stationarity(
    pattern: &PointPattern,
    k: usize,
    bound: BoundState,
    rule: &VerdictRule,
    seed: u64,
) -> Result<DetectionReport> {
    detect_pp_stationarity_with(pattern, k, SupNorm::Shortcut, bound, rule, seed)
}

pub fn detect_pp_stationarity_with(
    pattern: &PointPattern,
    k: usize,
    norm: SupNorm,
    bound: BoundState,
    rule: &VerdictRule,
    seed: u64,
) -> Result<DetectionReport> {
    let part = cluster_pattern(pattern, k, seed)?;
    let marks = pattern.nn_distances()?.to_vec();
    let mut r = detect_strict_with(&marks, &part, norm, bound, rule)?;
    r.seed = Some(seed);
    Ok(r)
}
