//! Threshold sequences {cⱼ} and Ĉ₁ calibration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{fold_statistics, Verdict, VerdictRule};
use crate::empirical::{supnorm_unsorted, SortedSample};
use crate::error::{Error, Result};
use crate::partition::sequential_blocks;

/// Conditional least-squares AR(1) coefficient; 1 when it does not exist.
pub fn ar1_mle(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::Input("AR(1) estimate needs at least 2 values".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for w in series.windows(2) {
        num += w[1] * w[0];
        den += w[0] * w[0];
    }
    if den == 0.0 || !den.is_finite() || !num.is_finite() {
        return Ok(1.0);
    }
    Ok(num / den)
}

fn loglog(j: usize) -> f64 {
    ((j as f64 + 1.0).ln()).ln()
}

pub fn parametric_ar1_bound(j: usize, c_tilde_j: f64, rho_hat: f64) -> Result<f64> {
    if j < 2 {
        return Err(Error::StageDomain(j));
    }
    Ok(c_tilde_j + 1e6 * (0.99999 - rho_hat.abs()) / loglog(j))
}

/// Step size for the adaptive ε̂ sequence.
pub fn adaptive_delta(rho_hat: f64) -> f64 {
    let r = rho_hat.abs();
    if r > 0.9985 {
        0.001
    } else if r > 0.9955 {
        0.01
    } else {
        0.05
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Parametric,
    Adaptive,
    Nonparametric,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub policy: PolicyKind,
    /// Last stage a bound was produced for (0 before the first).
    pub j: usize,
    pub c_hat: f64,
    pub eps_hat: f64,
    pub rho_hat: f64,
    pub benchmark_c: Option<Vec<f64>>,
}

impl BoundState {
    pub fn nonparametric(c1: f64) -> Self {
        Self { policy: PolicyKind::Nonparametric, j: 0, c_hat: c1, eps_hat: 0.0, rho_hat: 0.0, benchmark_c: None }
    }

    pub fn parametric(rho_hat: f64, benchmark_c: Vec<f64>) -> Self {
        Self {
            policy: PolicyKind::Parametric,
            j: 0,
            c_hat: 1e6,
            eps_hat: 0.0,
            rho_hat,
            benchmark_c: Some(benchmark_c),
        }
    }

    pub fn adaptive(rho_hat: f64, benchmark_c: Vec<f64>) -> Self {
        Self {
            policy: PolicyKind::Adaptive,
            j: 0,
            c_hat: 1.0,
            eps_hat: 0.0,
            rho_hat,
            benchmark_c: Some(benchmark_c),
        }
    }

    /// Fixed bound at every stage.
    pub fn constant(c: f64) -> Self {
        Self { policy: PolicyKind::Constant, j: 0, c_hat: c, eps_hat: 0.0, rho_hat: 0.0, benchmark_c: None }
    }

    /// c̃ⱼ, with stage 1 borrowing stage 2 when available.
    fn c_tilde(&self, j: usize) -> Result<f64> {
        let b = self.benchmark_c.as_deref().unwrap_or(&[]);
        let idx = if j == 1 && b.len() > 1 { 1 } else { j - 1 };
        b.get(idx)
            .copied()
            .ok_or_else(|| Error::Input(format!("benchmark bound sequence has no stage {j}")))
    }

    /// Bound for stage `j`, first folding in the previous indicator.
    pub fn next_bound(&mut self, j: usize, y_prev: Option<bool>) -> Result<f64> {
        match self.policy {
            PolicyKind::Nonparametric => nonparametric_bound(self, j, y_prev),
            PolicyKind::Constant => {
                self.j = j;
                Ok(self.c_hat)
            }
            PolicyKind::Parametric => {
                self.j = j;
                let c = self.c_tilde(j)?;
                parametric_ar1_bound(j.max(2), c, self.rho_hat)
            }
            PolicyKind::Adaptive => {
                let c = self.c_tilde(j)?;
                adaptive_ar1_bound(self, j, c, y_prev)
            }
        }
    }
}

/// Adaptive bound c̃ⱼ + Ĉⱼ(0.99999 − |ρ̂| + ε̂ⱼ)/log log(j+1). log log 2 is
/// negative, so stage 1 uses the j = 2 denominator.
pub fn adaptive_ar1_bound(state: &mut BoundState, j: usize, c_tilde_j: f64, y_prev: Option<bool>) -> Result<f64> {
    if j == 0 {
        return Err(Error::StageDomain(j));
    }
    if j > 1 {
        if let Some(y) = y_prev {
            let d = adaptive_delta(state.rho_hat);
            state.eps_hat += if y { d } else { -d };
            state.c_hat += 1.0;
        }
    }
    state.j = j;
    Ok(c_tilde_j + state.c_hat * (0.99999 - state.rho_hat.abs() + state.eps_hat) / loglog(j.max(2)))
}

/// cⱼ = Ĉⱼ / log(j+1) with Ĉⱼ = Ĉⱼ₋₁ ± 0.05 by the previous indicator.
pub fn nonparametric_bound(state: &mut BoundState, j: usize, y_prev: Option<bool>) -> Result<f64> {
    if j == 0 {
        return Err(Error::StageDomain(j));
    }
    if j > 1 {
        if let Some(y) = y_prev {
            state.c_hat += if y { 0.05 } else { -0.05 };
        }
    }
    state.j = j;
    Ok(state.c_hat / (j as f64 + 1.0).ln())
}

/// Benchmark c̃ⱼ: shortcut sup norms of a reference series cut into blocks.
pub fn benchmark_sup_norms(series: &[f64], block_size: usize) -> Result<Vec<f64>> {
    let part = sequential_blocks(series.len(), block_size)?;
    let pooled = SortedSample::from_slice(series)?;
    part.blocks
        .par_iter()
        .map(|b| {
            let vals: Vec<f64> = b.iter().map(|&i| series[i]).collect();
            supnorm_unsorted(&vals, &pooled)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    MinForStationary,
    MaxForNonstationary,
    Discriminating,
}

/// Default candidate grid 0.01, 0.02, …, 2.00.
pub fn default_grid() -> Vec<f64> {
    (1..=200).map(|i| i as f64 / 100.0).collect()
}

/// Verdict of a multi-band benchmark: Nonstationary if any band is,
/// Stationary only if all are.
pub fn combine_verdicts(v: &[Verdict]) -> Verdict {
    if v.iter().any(|&x| x == Verdict::Nonstationary) {
        Verdict::Nonstationary
    } else if !v.is_empty() && v.iter().all(|&x| x == Verdict::Stationary) {
        Verdict::Stationary
    } else {
        Verdict::Inconclusive
    }
}

fn verdict_for(stats: &[Vec<f64>], c1: f64, rule: &VerdictRule) -> Result<Verdict> {
    let v = stats
        .iter()
        .map(|s| fold_statistics(s, BoundState::nonparametric(c1), rule).map(|r| r.verdict))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_verdicts(&v))
}

/// Pick Ĉ₁ for the nonparametric bound from benchmark statistic sequences
/// (one sequence per band). In discriminating mode `bench` must end
/// Stationary and `contrast` Nonstationary; otherwise `contrast` is ignored.
pub fn calibrate_c1(
    bench: &[Vec<f64>],
    contrast: &[Vec<f64>],
    mode: CalibrationMode,
    grid: &[f64],
    rule: &VerdictRule,
) -> Result<f64> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("calibration grid must be nonempty and ascending".into()));
    }
    if bench.is_empty() || (mode == CalibrationMode::Discriminating && contrast.is_empty()) {
        return Err(Error::Input("missing benchmark statistics".into()));
    }
    let hits: Vec<bool> = grid
        .par_iter()
        .map(|&c| -> Result<bool> {
            let v = verdict_for(bench, c, rule)?;
            Ok(match mode {
                CalibrationMode::MinForStationary => v == Verdict::Stationary,
                CalibrationMode::MaxForNonstationary => v == Verdict::Nonstationary,
                CalibrationMode::Discriminating => {
                    v == Verdict::Stationary && verdict_for(contrast, c, rule)? == Verdict::Nonstationary
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = match mode {
        CalibrationMode::MaxForNonstationary => hits.iter().rposition(|&h| h),
        _ => hits.iter().position(|&h| h),
    };
    pick.map(|i| grid[i]).ok_or_else(|| Error::Calibration(format!("{mode:?}")))
}
