//! Empirical distribution functions, the block-vs-pooled sup norm, band
//! covariances and nearest-neighbour G statistics.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
}

impl SortedSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Input("NaN in sample".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Number of values ≤ x.
    pub fn count_le(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    pub fn ecdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.n() as f64
    }
}

pub fn ecdf_eval(sample: &SortedSample, x: f64) -> f64 {
    sample.ecdf(x)
}

/// Shortcut sup norm between a block's ECDF and the pooled ECDF:
/// 1 − F̃(max block). When the block holds the pooled maximum its top value
/// is dropped and the next one used; a single-point block then evaluates
/// the pooled ECDF just below the maximum.
pub fn supnorm_block_vs_pooled(block: &SortedSample, pooled: &SortedSample) -> f64 {
    supnorm_from_top(block.values(), pooled)
}

/// Same statistic from an unsorted block, only scanning for its two largest values.
pub fn supnorm_unsorted(block: &[f64], pooled: &SortedSample) -> Result<f64> {
    if block.is_empty() {
        return Err(Error::Input("empty block".into()));
    }
    let mut top = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in block {
        if v > top {
            second = top;
            top = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(shortcut(top, (block.len() > 1).then_some(second), pooled))
}

fn supnorm_from_top(sorted_block: &[f64], pooled: &SortedSample) -> f64 {
    let n = sorted_block.len();
    let top = sorted_block[n - 1];
    let second = (n > 1).then(|| sorted_block[n - 2]);
    shortcut(top, second, pooled)
}

fn shortcut(top: f64, second: Option<f64>, pooled: &SortedSample) -> f64 {
    let n = pooled.n() as f64;
    if top < pooled.max() {
        return 1.0 - pooled.count_le(top) as f64 / n;
    }
    match second {
        Some(x) => 1.0 - pooled.count_le(x) as f64 / n,
        None => 1.0 - (n - 1.0) / n,
    }
}

/// Exact sup |F̂ − F̃| in O(n log N): F̂ is flat between block values, so
/// only the pooled ECDF at each block value and just below the next matters.
pub fn supnorm_exact(block: &SortedSample, pooled: &SortedSample) -> f64 {
    let b = block.values();
    let n = b.len() as f64;
    let big_n = pooled.n() as f64;
    let p = pooled.values();
    let mut best = 0.0f64;
    let mut i = 0;
    while i < b.len() {
        let x = b[i];
        // F̂ just below x and at x
        let below = i as f64 / n;
        while i < b.len() && b[i] == x {
            i += 1;
        }
        let at = i as f64 / n;
        let lt = p.partition_point(|&v| v < x) as f64 / big_n;
        let le = pooled.count_le(x) as f64 / big_n;
        best = best.max((below - lt).abs()).max((at - le).abs());
    }
    best
}

/// Exact statistic from an unsorted block.
pub fn supnorm_exact_unsorted(block: &[f64], pooled: &SortedSample) -> Result<f64> {
    Ok(supnorm_exact(&SortedSample::from_slice(block)?, pooled))
}

/// Exact sup |F̂ − F̃| by scanning every pooled order statistic.
pub fn supnorm_brute_force(block: &SortedSample, pooled: &SortedSample) -> f64 {
    let mut best = 0.0f64;
    for &x in pooled.values() {
        best = best.max((block.ecdf(x) - pooled.ecdf(x)).abs());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovBand {
    pub h_lo: f64,
    pub h_hi: f64,
    /// Index pairs stored lower index first.
    pub pairs: Vec<(usize, usize)>,
}

/// Band covariance with the ½ factor on the cross-product sum:
/// Σ X_a X_b / (2n) − mean(first) · mean(second).
pub fn block_covariance(values: &[f64], band: &CovBand) -> Result<f64> {
    if band.pairs.is_empty() {
        return Err(Error::EmptyBand);
    }
    let n = band.pairs.len() as f64;
    let (mut cross, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &(a, b) in &band.pairs {
        cross += values[a] * values[b];
        s1 += values[a];
        s2 += values[b];
    }
    Ok(cross / (2.0 * n) - (s1 / n) * (s2 / n))
}

/// Population standard deviations of the first and second pair elements.
pub fn band_sds(values: &[f64], band: &CovBand) -> (f64, f64) {
    let n = band.pairs.len() as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for &(a, b) in &band.pairs {
        s1 += values[a];
        s2 += values[b];
    }
    let (m1, m2) = (s1 / n, s2 / n);
    let (mut v1, mut v2) = (0.0, 0.0);
    for &(a, b) in &band.pairs {
        v1 += (values[a] - m1).powi(2);
        v2 += (values[b] - m2).powi(2);
    }
    ((v1 / n).sqrt(), (v2 / n).sqrt())
}

pub fn to_correlation(cov: f64, sd1: f64, sd2: f64) -> Result<f64> {
    if !(sd1 > 0.0 && sd2 > 0.0) {
        return Err(Error::Degenerate(format!("standard deviations {sd1}, {sd2}")));
    }
    Ok((cov / (sd1 * sd2)).clamp(-1.0, 1.0))
}

#[inline]
fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Exact O(n²) nearest-neighbour distances.
pub fn nn_distances(points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::Input("nearest-neighbour distances need at least 2 points".into()));
    }
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut best = f64::INFINITY;
            for (k, &q) in points.iter().enumerate() {
                if k != i {
                    let d = dist2(p, q);
                    if d < best {
                        best = d;
                    }
                }
            }
            best.sqrt()
        })
        .collect())
}

/// Cell-grid accelerated nearest-neighbour distances; returns the same
/// values as [`nn_distances`].
pub fn nn_distances_grid(points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Input("nearest-neighbour distances need at least 2 points".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let side = ((n as f64).sqrt().ceil() as usize).max(1);
    let w = ((x1 - x0) / side as f64).max(f64::MIN_POSITIVE);
    let h = ((y1 - y0) / side as f64).max(f64::MIN_POSITIVE);
    let cell = |p: [f64; 2]| -> (usize, usize) {
        let cx = (((p[0] - x0) / w) as usize).min(side - 1);
        let cy = (((p[1] - y0) / h) as usize).min(side - 1);
        (cx, cy)
    };
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); side * side];
    for (i, &p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        buckets[cy * side + cx].push(i);
    }
    let step = w.min(h);
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let (cx, cy) = cell(p);
            let mut best = f64::INFINITY;
            let mut ring = 0usize;
            loop {
                let lo_x = cx.saturating_sub(ring);
                let hi_x = (cx + ring).min(side - 1);
                let lo_y = cy.saturating_sub(ring);
                let hi_y = (cy + ring).min(side - 1);
                for gy in lo_y..=hi_y {
                    for gx in lo_x..=hi_x {
                        let on_ring = gx + ring == cx || gx == cx + ring || gy + ring == cy || gy == cy + ring;
                        if !on_ring {
                            continue;
                        }
                        for &k in &buckets[gy * side + gx] {
                            if k != i {
                                let d = dist2(p, points[k]);
                                if d < best {
                                    best = d;
                                }
                            }
                        }
                    }
                }
                // every unvisited cell is at least `ring * step` away
                let reach = ring as f64 * step;
                let covered = lo_x == 0 && lo_y == 0 && hi_x == side - 1 && hi_y == side - 1;
                if (best.is_finite() && reach * reach >= best) || covered {
                    break;
                }
                ring += 1;
            }
            best.sqrt()
        })
        .collect())
}

pub fn g_theoretical(lambda: f64, x: f64) -> f64 {
    1.0 - (-lambda * PI * x * x).exp()
}

/// (1/n) Σ |Ĝ(dᵢ) − G̃(dᵢ)| with Ĝ the ECDF of the distances themselves.
pub fn integrated_g_discrepancy(distances: &[f64], lambda_hat: f64) -> Result<f64> {
    let s = SortedSample::from_slice(distances)?;
    let n = s.n() as f64;
    let total: f64 = s
        .values()
        .iter()
        .map(|&d| (s.ecdf(d) - g_theoretical(lambda_hat, d)).abs())
        .sum();
    Ok(total / n)
}
