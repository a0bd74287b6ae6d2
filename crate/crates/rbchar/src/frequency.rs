//! Oscillation-frequency recovery: logistic transform, power scaling,
//! interval binning and Dirichlet / Dirichlet-process recursions.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recursive_bayes::{DirichletRecursionState, DpRecursionState};

/// Highest geometric bin kept in the infinite model; 1 − 2^{−52} is the last
/// breakpoint distinguishable from 1 in double precision.
pub const GEOMETRIC_BINS: usize = 53;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinSpec {
    /// M bins with widths q (uniform 1/M when `q` is empty).
    Finite {
        m: usize,
        #[serde(default)]
        q: Vec<f64>,
    },
    /// Countably many bins with widths 2^{−m}.
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyConfig {
    pub r: f64,
    pub multiplier: f64,
    pub bins: BinSpec,
    pub epsilon_group: f64,
    /// Subtract the series mean before transforming.
    pub center: bool,
    /// Keep every `record_every`-th stage (and the last) in the trajectory.
    pub record_every: usize,
}

impl FrequencyConfig {
    pub fn finite(r: f64, m: usize) -> Self {
        Self {
            r,
            multiplier: 1.0,
            bins: BinSpec::Finite { m, q: Vec::new() },
            epsilon_group: 0.005,
            center: false,
            record_every: 1,
        }
    }

    pub fn infinite(r: f64) -> Self {
        Self { bins: BinSpec::Infinite, ..Self::finite(r, 2) }
    }

    /// Right endpoints p̃₁ < p̃₂ < …, scaled by the multiplier.
    pub fn breakpoints(&self) -> Result<Vec<f64>> {
        if !(self.r > 0.0) || !(self.multiplier > 0.0) {
            return Err(Error::Input("r and multiplier must be positive".into()));
        }
        let mut bp = match &self.bins {
            BinSpec::Finite { m, q } => {
                if *m < 2 {
                    return Err(Error::Input(format!("bin count {m} below 2")));
                }
                let q = if q.is_empty() { vec![1.0 / *m as f64; *m] } else { q.clone() };
                if q.len() != *m || q.iter().any(|w| !(*w > 0.0)) {
                    return Err(Error::Input("bin widths must be M positive numbers".into()));
                }
                let total: f64 = q.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Input(format!("bin widths sum to {total}, not 1")));
                }
                let mut acc = 0.0;
                q.iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect::<Vec<_>>()
            }
            BinSpec::Infinite => (1..=GEOMETRIC_BINS).map(|m| 1.0 - 0.5f64.powi(m as i32)).collect(),
        };
        if let Some(last) = bp.last_mut() {
            *last = 1.0;
        }
        Ok(bp.into_iter().map(|p| p * self.multiplier).collect())
    }
}

/// exp(x)/(1+exp(x)) without overflow.
pub fn logistic(x: f64) -> f64 {
    if x > 30.0 {
        1.0 - (-x).exp()
    } else if x < -30.0 {
        x.exp()
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logistic_transform(series: &[f64]) -> Vec<f64> {
    series.iter().map(|&x| logistic(x)).collect()
}

/// Unique m (1-based) with p̃_{m−1} < z ≤ p̃_m; z = 0 goes to bin 1.
pub fn bin_assign(z: f64, breakpoints: &[f64]) -> Result<usize> {
    let top = *breakpoints.last().ok_or_else(|| Error::Input("no breakpoints".into()))?;
    if !(z >= 0.0) || z > top {
        return Err(Error::BinRange(z));
    }
    Ok(breakpoints.partition_point(|&p| p < z).max(0) + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyStage {
    pub stage: usize,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRun {
    pub trajectory: Vec<FrequencyStage>,
    pub final_means: Vec<f64>,
    pub final_vars: Vec<f64>,
    pub categories: Vec<usize>,
}

fn snapshot_dirichlet(s: &DirichletRecursionState) -> Result<(Vec<f64>, Vec<f64>)> {
    (1..=s.m).map(|m| s.mean_var(m)).collect::<Result<Vec<_>>>().map(|v| v.into_iter().unzip())
}

fn snapshot_dp(s: &DpRecursionState, bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    (1..=bins).map(|m| s.mean_var(m)).collect::<Result<Vec<_>>>().map(|v| v.into_iter().unzip())
}

/// Stage j consumes multiplier·Z_jʳ, bins it and updates the recursion.
pub fn run_frequency_recursion(series: &[f64], cfg: &FrequencyConfig) -> Result<FrequencyRun> {
    if series.len() < 2 {
        return Err(Error::Input("frequency recursion needs at least 2 values".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite value in series".into()));
    }
    let bp = cfg.breakpoints()?;
    let every = cfg.record_every.max(1);
    let shift = if cfg.center { series.iter().sum::<f64>() / series.len() as f64 } else { 0.0 };
    let mut cats = Vec::with_capacity(series.len());
    for &x in series {
        let z = cfg.multiplier * logistic(x - shift).powf(cfg.r);
        cats.push(bin_assign(z.min(cfg.multiplier), &bp)?);
    }
    let mut trajectory = Vec::new();
    let last = series.len();
    let (final_means, final_vars) = match cfg.bins {
        BinSpec::Finite { m, .. } => {
            let mut st = DirichletRecursionState::new(m)?;
            for (i, &c) in cats.iter().enumerate() {
                st.update(c)?;
                let stage = i + 1;
                if stage % every == 0 || stage == last {
                    let (means, vars) = snapshot_dirichlet(&st)?;
                    trajectory.push(FrequencyStage { stage, means, vars });
                }
            }
            snapshot_dirichlet(&st)?
        }
        BinSpec::Infinite => {
            let mut st = DpRecursionState::new();
            for (i, &c) in cats.iter().enumerate() {
                st.update(c)?;
                let stage = i + 1;
                if stage % every == 0 || stage == last {
                    let (means, vars) = snapshot_dp(&st, GEOMETRIC_BINS)?;
                    trajectory.push(FrequencyStage { stage, means, vars });
                }
            }
            snapshot_dp(&st, GEOMETRIC_BINS)?
        }
    };
    Ok(FrequencyRun { trajectory, final_means, final_vars, categories: cats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedFrequency {
    pub frequency: f64,
    /// 1-based bins in the group.
    pub bins: Vec<usize>,
}

/// Drop bin 1, group maximal runs of consecutive bins with final mean above
/// `epsilon_group`, and sum each run.
pub fn extract_frequencies(final_means: &[f64], epsilon_group: f64) -> Vec<ExtractedFrequency> {
    let mut out: Vec<ExtractedFrequency> = Vec::new();
    let mut open = false;
    for (i, &p) in final_means.iter().enumerate().skip(1) {
        if p > epsilon_group {
            if !open {
                out.push(ExtractedFrequency { frequency: 0.0, bins: Vec::new() });
                open = true;
            }
            let g = out.last_mut().expect("group opened");
            g.frequency += p;
            g.bins.push(i + 1);
        } else {
            open = false;
        }
    }
    out
}

/// 2cos(2πt/50 + 0.6π) + N(0, σ²), t = 1..=T.
pub fn single_freq_series(t_len: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Input(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((1..=t_len)
        .map(|t| 2.0 * (2.0 * PI * t as f64 / 50.0 + 0.6 * PI).cos() + noise.sample(&mut rng))
        .collect())
}

/// Σ over ω ∈ {6, 10, 40}/100 of a cos(2πωt) + b sin(2πωt), t = 1..=T.
pub fn mult_freq_series(t_len: usize) -> Vec<f64> {
    let terms = [(6.0, 2.0, 3.0), (10.0, 4.0, 5.0), (40.0, 6.0, 7.0)];
    (1..=t_len)
        .map(|t| {
            terms
                .iter()
                .map(|&(w, a, b)| {
                    let arg = 2.0 * PI * w * t as f64 / 100.0;
                    a * arg.cos() + b * arg.sin()
                })
                .sum()
        })
        .collect()
}
