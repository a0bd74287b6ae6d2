//! Stage loop shared by every detector: statistic, bound, indicator, Beta
//! recursion, verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{combine_verdicts, BoundState};
use crate::empirical::{band_sds, block_covariance, supnorm_exact_unsorted, supnorm_unsorted, to_correlation, SortedSample};
use crate::error::{Error, Result};
use crate::partition::{distance_bands, Partition};
use crate::recursive_bayes::BetaRecursionState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stationary,
    Nonstationary,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    pub theta_hi: f64,
    pub theta_lo: f64,
    pub tail_fraction: f64,
    /// Trajectories shorter than this are always Inconclusive.
    pub min_stages: usize,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self { theta_hi: 0.8, theta_lo: 0.2, tail_fraction: 0.2, min_stages: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub j: usize,
    pub s: f64,
    pub c: f64,
    pub y: bool,
    pub post_mean: f64,
    pub post_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub stages: Vec<StageRecord>,
    pub verdict: Verdict,
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl DetectionReport {
    pub fn trajectory(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.post_mean).collect()
    }

    pub fn final_mean(&self) -> f64 {
        self.stages.last().map_or(f64::NAN, |s| s.post_mean)
    }
}

/// Classify a posterior-mean trajectory by the mean of its final tail.
pub fn verdict(trajectory: &[f64], rule: &VerdictRule) -> Result<Verdict> {
    if trajectory.is_empty() {
        return Err(Error::Input("empty trajectory".into()));
    }
    if !(0.0 <= rule.theta_lo && rule.theta_lo < rule.theta_hi && rule.theta_hi <= 1.0) {
        return Err(Error::Input("verdict thresholds must satisfy 0 <= lo < hi <= 1".into()));
    }
    if trajectory.len() < rule.min_stages {
        return Ok(Verdict::Inconclusive);
    }
    let n = trajectory.len();
    let tail = ((rule.tail_fraction * n as f64).ceil() as usize).clamp(1, n);
    let m = trajectory[n - tail..].iter().sum::<f64>() / tail as f64;
    Ok(if m >= rule.theta_hi {
        Verdict::Stationary
    } else if m <= rule.theta_lo {
        Verdict::Nonstationary
    } else {
        Verdict::Inconclusive
    })
}

/// Run statistics sⱼ (in stage order) through bound, indicator and recursion.
pub fn fold_statistics(stats: &[f64], mut bound: BoundState, rule: &VerdictRule) -> Result<DetectionReport> {
    let mut state = BetaRecursionState::new();
    let mut prev = None;
    let mut stages = Vec::with_capacity(stats.len());
    for (i, &s) in stats.iter().enumerate() {
        let j = i + 1;
        let c = bound.next_bound(j, prev)?;
        let y = s <= c;
        state = state.update(y);
        let (m, v) = state.mean_var()?;
        stages.push(StageRecord { j, s, c, y, post_mean: m, post_var: v });
        prev = Some(y);
    }
    let traj: Vec<f64> = stages.iter().map(|s| s.post_mean).collect();
    let verdict = verdict(&traj, rule)?;
    Ok(DetectionReport { stages, verdict, config: serde_json::Value::Null, seed: None })
}

/// How the block-versus-pooled sup norm is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupNorm {
    /// 1 − F̃(block max), second max for the block holding the pooled max.
    #[default]
    Shortcut,
    /// Exact Kolmogorov–Smirnov distance.
    Exact,
}

/// Per-block shortcut sup norms against the pooled sample, in block order.
pub fn strict_statistics(values: &[f64], partition: &Partition) -> Result<Vec<f64>> {
    strict_statistics_with(values, partition, SupNorm::Shortcut)
}

pub fn strict_statistics_with(values: &[f64], partition: &Partition, norm: SupNorm) -> Result<Vec<f64>> {
    if partition.n() != values.len() {
        return Err(Error::Input(format!(
            "partition covers {} indices but {} values given",
            partition.n(),
            values.len()
        )));
    }
    if partition.k() < 2 {
        return Err(Error::Input("strict detection needs at least 2 blocks".into()));
    }
    if let Some(b) = partition.blocks.iter().find(|b| b.len() < 3) {
        return Err(Error::Input(format!("block of size {} below the minimum of 3", b.len())));
    }
    let pooled = SortedSample::from_slice(values)?;
    partition
        .blocks
        .par_iter()
        .map(|b| {
            let vals: Vec<f64> = b.iter().map(|&i| values[i]).collect();
            match norm {
                SupNorm::Shortcut => supnorm_unsorted(&vals, &pooled),
                SupNorm::Exact => supnorm_exact_unsorted(&vals, &pooled),
            }
        })
        .collect()
}

pub fn detect_strict(values: &[f64], partition: &Partition, bound: BoundState, rule: &VerdictRule) -> Result<DetectionReport> {
    detect_strict_with(values, partition, SupNorm::Shortcut, bound, rule)
}

pub fn detect_strict_with(
    values: &[f64],
    partition: &Partition,
    norm: SupNorm,
    bound: BoundState,
    rule: &VerdictRule,
) -> Result<DetectionReport> {
    let stats = strict_statistics_with(values, partition, norm)?;
    fold_statistics(&stats, bound, rule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub h_lo: f64,
    pub h_hi: f64,
    pub valid: bool,
    /// Clusters contributing a stage, in stage order.
    pub clusters: Vec<usize>,
    pub report: Option<DetectionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub bands: Vec<BandReport>,
    pub verdict: Verdict,
}

/// Per-band correlation statistics |corrᵢ − pooled corr| over the clusters
/// where the band is nonempty. Returns (h_lo, h_hi, valid, clusters, stats).
#[allow(clippy::type_complexity)]
pub fn covariance_statistics(
    values: &[f64],
    locations: &[Vec<f64>],
    partition: &Partition,
    boundaries: &[f64],
) -> Result<Vec<(f64, f64, bool, Vec<usize>, Vec<f64>)>> {
    if values.len() != locations.len() || partition.n() != values.len() {
        return Err(Error::Input("values, locations and partition disagree in length".into()));
    }
    let cols = distance_bands(locations, partition, boundaries)?;
    let mut out = Vec::with_capacity(cols.len());
    for col in cols {
        if !col.valid {
            out.push((col.h_lo, col.h_hi, false, Vec::new(), Vec::new()));
            continue;
        }
        let mut ids = Vec::new();
        let mut corr = Vec::new();
        let mut weights = Vec::new();
        for (ci, band) in col.clusters.iter().enumerate() {
            if band.pairs.is_empty() {
                continue;
            }
            let cov = block_covariance(values, band)?;
            let (sd1, sd2) = band_sds(values, band);
            // a constant band carries no correlation information
            let r = to_correlation(cov, sd1, sd2).unwrap_or(0.0);
            ids.push(ci);
            corr.push(r);
            weights.push(band.pairs.len() as f64);
        }
        let wsum: f64 = weights.iter().sum();
        let pooled = corr.iter().zip(&weights).map(|(r, w)| r * w).sum::<f64>() / wsum;
        let stats = corr.iter().map(|r| (r - pooled).abs()).collect();
        out.push((col.h_lo, col.h_hi, true, ids, stats));
    }
    Ok(out)
}

pub fn detect_covariance(
    values: &[f64],
    locations: &[Vec<f64>],
    partition: &Partition,
    boundaries: &[f64],
    bound: BoundState,
    rule: &VerdictRule,
) -> Result<CovarianceReport> {
    let per_band = covariance_statistics(values, locations, partition, boundaries)?;
    let mut bands = Vec::new();
    let mut verdicts = Vec::new();
    for (h_lo, h_hi, valid, clusters, stats) in per_band {
        let report = if valid && !stats.is_empty() {
            let r = fold_statistics(&stats, bound.clone(), rule)?;
            verdicts.push(r.verdict);
            Some(r)
        } else {
            None
        };
        bands.push(BandReport { h_lo, h_hi, valid: report.is_some(), clusters, report });
    }
    if verdicts.is_empty() {
        return Err(Error::NotVerifiable);
    }
    Ok(CovarianceReport { verdict: combine_verdicts(&verdicts), bands })
}
