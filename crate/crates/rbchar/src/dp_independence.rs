//! Dirichlet-process smoothed joint, conditional and marginal distribution
//! functions, and the recursive mutual-independence detector.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bounds::BoundState;
use crate::detect::{fold_statistics, DetectionReport, VerdictRule};
use crate::empirical::nn_distances;
use crate::error::{Error, Result};
use crate::gp::{cholesky_jittered, standard_normals};
use crate::partition::Partition;
use crate::point_process::{cluster_pattern, PointPattern};

pub const MC_DRAWS: usize = 10_000;
const MC_SEED: u64 = 0x5eed_d1e7;
/// Prefix joint CDF below this stops the detector.
pub const JOINT_FLOOR: f64 = 1e-6;
/// Share of data rows a conditioning prefix must keep by default.
pub const MIN_PREFIX_FRACTION: f64 = 0.5;

fn phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpJointModel {
    pub alpha: f64,
    pub base_mean: Vec<f64>,
    pub base_cov: Vec<Vec<f64>>,
    /// n rows × K columns.
    pub data: Vec<Vec<f64>>,
    /// Fixed Monte Carlo sample from G₀, MC_DRAWS × K.
    #[serde(skip)]
    mc: Vec<Vec<f64>>,
    /// Maximizers t̃₁.. cached by the greedy search.
    pub maximizers: Vec<f64>,
    /// Conditioning thresholds must leave at least this share of the n rows
    /// below them. 0 gives the unrestricted scan, which on small prefixes is
    /// dominated by conditional ECDFs built from one or two rows.
    #[serde(default = "default_min_prefix_fraction")]
    pub min_prefix_fraction: f64,
}

fn default_min_prefix_fraction() -> f64 {
    MIN_PREFIX_FRACTION
}

fn empirical_mean_cov(data: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = data.len() as f64;
    let k = data[0].len();
    let mean: Vec<f64> = (0..k).map(|c| data.iter().map(|r| r[c]).sum::<f64>() / n).collect();
    let denom = if data.len() > 1 { n - 1.0 } else { 1.0 };
    let cov = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| data.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / denom)
                .collect()
        })
        .collect();
    (mean, cov)
}

/// Truncate every cluster to the shortest one and fit G₀ = N(mean, cov).
pub fn build_dp_model(clusters: &[Vec<f64>], alpha: f64) -> Result<DpJointModel> {
    if clusters.len() < 2 {
        return Err(Error::Input("at least 2 clusters are required".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Input(format!("alpha must be positive, got {alpha}")));
    }
    if let Some(c) = clusters.iter().find(|c| c.len() < 2) {
        return Err(Error::Input(format!("cluster with {} observations, need >= 2", c.len())));
    }
    if clusters.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite observation".into()));
    }
    let n = clusters.iter().map(|c| c.len()).min().unwrap_or(0);
    let k = clusters.len();
    let data: Vec<Vec<f64>> = (0..n).map(|r| clusters.iter().map(|c| c[r]).collect()).collect();
    let (base_mean, mut base_cov) = empirical_mean_cov(&data);
    let scale = (0..k).map(|i| base_cov[i][i]).fold(0.0, f64::max).max(1e-12);
    for (i, row) in base_cov.iter_mut().enumerate() {
        if row[i] <= 0.0 {
            row[i] = 1e-9 * scale;
        }
    }
    let chol = match cholesky_jittered(&base_cov) {
        Ok(c) => c,
        Err(_) => {
            let mut c = base_cov.clone();
            for (i, row) in c.iter_mut().enumerate() {
                row[i] += 1e-6 * scale;
            }
            cholesky_jittered(&c)?
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
    let mc = (0..MC_DRAWS)
        .map(|_| {
            let z = standard_normals(k, &mut rng);
            chol.mul(&z).iter().zip(&base_mean).map(|(a, m)| a + m).collect()
        })
        .collect();
    Ok(DpJointModel {
        alpha,
        base_mean,
        base_cov,
        data,
        mc,
        maximizers: Vec::new(),
        min_prefix_fraction: MIN_PREFIX_FRACTION,
    })
}

impl DpJointModel {
    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn k(&self) -> usize {
        self.base_mean.len()
    }

    fn sd(&self, c: usize) -> f64 {
        self.base_cov[c][c].max(0.0).sqrt()
    }

    fn base_marginal(&self, c: usize, t: f64) -> f64 {
        let sd = self.sd(c);
        if sd == 0.0 {
            return if t >= self.base_mean[c] { 1.0 } else { 0.0 };
        }
        phi((t - self.base_mean[c]) / sd)
    }

    fn check_prefix(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.k() {
            return Err(Error::Input(format!("prefix length {j} outside 1..={}", self.k())));
        }
        Ok(())
    }

    /// G₀ probability of the first `t.len()` coordinates lying below `t`.
    pub fn base_prefix(&self, t: &[f64]) -> f64 {
        if t.len() == 1 {
            return self.base_marginal(0, t[0]);
        }
        let hits = self.mc.iter().filter(|r| below(r, t)).count();
        hits as f64 / self.mc.len() as f64
    }

    fn blend(&self, base: f64, count: usize) -> f64 {
        (self.alpha * base + count as f64) / (self.alpha + self.n() as f64)
    }

    /// Fewest data rows a conditioning prefix may keep.
    pub fn min_prefix_rows(&self) -> usize {
        ((self.min_prefix_fraction * self.n() as f64).ceil() as usize).min(self.n())
    }
}

fn below(row: &[f64], t: &[f64]) -> bool {
    t.iter().zip(row).all(|(t, x)| x <= t)
}

pub fn dp_joint_cdf(model: &DpJointModel, t: &[f64], j: usize) -> Result<f64> {
    model.check_prefix(j)?;
    if t.len() < j {
        return Err(Error::Input(format!("{} thresholds for prefix {j}", t.len())));
    }
    let t = &t[..j];
    let count = model.data.iter().filter(|r| below(r, t)).count();
    Ok(model.blend(model.base_prefix(t), count))
}

/// F(X_j ≤ t_j | X_1 ≤ t_1, …, X_{j−1} ≤ t_{j−1}); at j = 1 the joint itself.
pub fn dp_conditional_cdf(model: &DpJointModel, t: &[f64]) -> Result<f64> {
    let j = t.len();
    let num = dp_joint_cdf(model, t, j)?;
    if j == 1 {
        return Ok(num);
    }
    let den = dp_joint_cdf(model, t, j - 1)?;
    if den <= 0.0 {
        return Err(Error::NullConditioning);
    }
    Ok(num / den)
}

/// Marginal of X_j (1-based j) with the univariate normal base component.
pub fn dp_marginal_cdf(model: &DpJointModel, j: usize, tj: f64) -> Result<f64> {
    model.check_prefix(j)?;
    let c = j - 1;
    let count = model.data.iter().filter(|r| r[c] <= tj).count();
    Ok(model.blend(model.base_marginal(c, tj), count))
}

fn sorted_le(v: &[f64], x: f64) -> usize {
    v.partition_point(|&a| a <= x)
}

/// Result of scanning one coordinate: the sup gap with its arg max, and the
/// arg max restricted to thresholds that keep enough prefix rows.
struct Scan {
    gap: f64,
    at: f64,
    admissible_gap: f64,
    admissible_at: f64,
}

/// Scan t_j over the column-j data given rows / draws already passing the prefix.
fn scan_column(
    model: &DpJointModel,
    col: usize,
    data_pass: &[&Vec<f64>],
    mc_pass: &[&Vec<f64>],
    den: f64,
    candidates: &[f64],
) -> Scan {
    let mut d: Vec<f64> = data_pass.iter().map(|r| r[col]).collect();
    let mut m: Vec<f64> = mc_pass.iter().map(|r| r[col]).collect();
    d.sort_by(f64::total_cmp);
    m.sort_by(f64::total_cmp);
    let mut col_all: Vec<f64> = model.data.iter().map(|r| r[col]).collect();
    col_all.sort_by(f64::total_cmp);
    let nmc = model.mc.len() as f64;
    let min_rows = model.min_prefix_rows();
    let mut out = Scan { gap: f64::NEG_INFINITY, at: f64::NAN, admissible_gap: f64::NEG_INFINITY, admissible_at: f64::NAN };
    for &t in candidates {
        let base = sorted_le(&m, t) as f64 / nmc;
        let rows = sorted_le(&d, t);
        let joint = model.blend(base, rows);
        let cond = joint / den;
        let marg = model.blend(model.base_marginal(col, t), sorted_le(&col_all, t));
        let gap = (cond - marg).abs();
        if gap > out.gap {
            out.gap = gap;
            out.at = t;
        }
        if rows >= min_rows && gap > out.admissible_gap {
            out.admissible_gap = gap;
            out.admissible_at = t;
        }
    }
    if out.admissible_at.is_nan() {
        // only the top of the column keeps every passing row
        out.admissible_at = candidates.last().copied().unwrap_or(f64::INFINITY);
    }
    out
}

fn sorted_column(model: &DpJointModel, col: usize) -> Vec<f64> {
    let mut v: Vec<f64> = model.data.iter().map(|r| r[col]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Greedy sup of |conditional − marginal| at prefix j (1-based, j ≥ 2).
/// j = 2 scans the t₁ × t₂ data grid; later stages fix the cached
/// maximizers and scan t_j only. Conditioning thresholds are limited to those
/// keeping at least [`DpJointModel::min_prefix_rows`] data rows; the compared
/// coordinate t_j is scanned over all its values. Returns the sup and its arg
/// max; the cached maximizer for t_j is the best threshold that keeps the
/// next prefix admissible.
pub fn greedy_sup_difference(model: &mut DpJointModel, j: usize) -> Result<(f64, f64)> {
    model.check_prefix(j)?;
    if j < 2 {
        return Err(Error::StageDomain(j));
    }
    let min_rows = model.min_prefix_rows();
    if j == 2 {
        let mut col0: Vec<f64> = model.data.iter().map(|r| r[0]).collect();
        col0.sort_by(f64::total_cmp);
        let t1s: Vec<f64> = sorted_column(model, 0).into_iter().filter(|&t| sorted_le(&col0, t) >= min_rows).collect();
        let t2s = sorted_column(model, 1);
        let m = &*model;
        let results: Vec<(Scan, f64)> = t1s
            .par_iter()
            .map(|&t1| {
                let dp: Vec<&Vec<f64>> = m.data.iter().filter(|r| r[0] <= t1).collect();
                let mp: Vec<&Vec<f64>> = m.mc.iter().filter(|r| r[0] <= t1).collect();
                let den = m.blend(m.base_marginal(0, t1), dp.len());
                (scan_column(m, 1, &dp, &mp, den, &t2s), t1)
            })
            .collect();
        // first maximum in t₁ order, independent of scheduling
        let mut best: Option<&(Scan, f64)> = None;
        for r in &results {
            if best.is_none_or(|b| r.0.gap > b.0.gap) {
                best = Some(r);
            }
        }
        let (scan, t1) = best.ok_or_else(|| Error::Input("empty threshold grid".into()))?;
        let (gap, at, next) = (scan.gap, scan.at, scan.admissible_at);
        model.maximizers = vec![*t1, next];
        return Ok((gap, at));
    }
    if model.maximizers.len() != j - 1 {
        return Err(Error::Input(format!(
            "stage {j} needs {} cached maximizers, found {}",
            j - 1,
            model.maximizers.len()
        )));
    }
    let prefix = model.maximizers.clone();
    let den = dp_joint_cdf(model, &prefix, j - 1)?;
    if den <= 0.0 {
        return Err(Error::NullConditioning);
    }
    let dp: Vec<&Vec<f64>> = model.data.iter().filter(|r| below(r, &prefix)).collect();
    let mp: Vec<&Vec<f64>> = model.mc.iter().filter(|r| below(r, &prefix)).collect();
    let cands = sorted_column(model, j - 1);
    let scan = scan_column(model, j - 1, &dp, &mp, den, &cands);
    model.maximizers.push(scan.admissible_at);
    Ok((scan.gap, scan.at))
}

/// How rows of the n × K matrix are matched across clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowMatching {
    /// Within-cluster lexicographic (x, y) order.
    SortedLocation,
    /// Seeded random permutation within each cluster.
    Random { seed: u64 },
}

/// Log nearest-neighbour distances inside each cluster, ordered per `matching`.
/// Coincident points (zero distance) are dropped.
pub fn cluster_log_distances(pattern: &PointPattern, partition: &Partition, matching: RowMatching) -> Result<Vec<Vec<f64>>> {
    partition
        .blocks
        .iter()
        .enumerate()
        .map(|(ci, b)| {
            let mut pts: Vec<[f64; 2]> = b.iter().map(|&i| pattern.points[i]).collect();
            pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let d = nn_distances(&pts)?;
            let mut logs: Vec<f64> = d.into_iter().filter(|v| *v > 0.0).map(f64::ln).collect();
            if let RowMatching::Random { seed } = matching {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(ci as u64));
                logs.shuffle(&mut rng);
            }
            Ok(logs)
        })
        .collect()
}

/// Stage j = 2..K statistics, stopping early when the prefix joint CDF at the
/// cached maximizers falls below [`JOINT_FLOOR`].
pub fn independence_statistics(model: &mut DpJointModel) -> Result<Vec<f64>> {
    let mut stats = Vec::with_capacity(model.k().saturating_sub(1));
    for j in 2..=model.k() {
        if j > 2 {
            let den = dp_joint_cdf(model, &model.maximizers.clone(), j - 1)?;
            if den < JOINT_FLOOR {
                break;
            }
        }
        let (s, _) = greedy_sup_difference(model, j)?;
        stats.push(s);
    }
    Ok(stats)
}

/// Recursive mutual-independence detector. Stationary-analog means mutually
/// independent (Poisson-compatible), Nonstationary-analog means dependent.
pub fn detect_mutual_independence(clusters: &[Vec<f64>], alpha: f64, bound: BoundState, rule: &VerdictRule) -> Result<DetectionReport> {
    if clusters.len() < 3 {
        return Err(Error::Input("independence detection needs at least 3 clusters".into()));
    }
    let mut model = build_dp_model(clusters, alpha)?;
    let stats = independence_statistics(&mut model)?;
    let mut report = fold_statistics(&stats, bound, rule)?;
    for s in report.stages.iter_mut() {
        s.j += 1;
    }
    Ok(report)
}

/// Poisson check on a point pattern: K-means clusters, per-cluster log
/// nearest-neighbour distances, then [`detect_mutual_independence`].
pub fn detect_poisson(
    pattern: &PointPattern,
    k: usize,
    alpha: f64,
    matching: RowMatching,
    bound: BoundState,
    rule: &VerdictRule,
    seed: u64,
) -> Result<DetectionReport> {
    let part = cluster_pattern(pattern, k, seed)?;
    let clusters = cluster_log_distances(pattern, &part, matching)?;
    let mut r = detect_mutual_independence(&clusters, alpha, bound, rule)?;
    r.seed = Some(seed);
    Ok(r)
}
