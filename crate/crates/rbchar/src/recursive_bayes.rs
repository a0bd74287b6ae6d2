//! Stage-wise conjugate recursions: Beta for binary indicators, finite
//! Dirichlet and a Dirichlet process with geometric base for categories.
//!
//! All three use the summable prior weights 1/j² at stage j.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default prior weight added at stage `k`.
#[inline]
pub fn inverse_square(k: u64) -> f64 {
    let k = k as f64;
    1.0 / (k * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BetaRecursionState {
    pub k: u64,
    pub sum_alpha: f64,
    pub sum_beta: f64,
    pub sum_y: u64,
}

impl BetaRecursionState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Consume indicator `y` with the default 1/k² prior weights.
    pub fn update(&self, y: bool) -> Self {
        let w = inverse_square(self.k + 1);
        self.update_weighted(y, w, w)
    }

    /// Consume `y` with caller-supplied stage weights (αₖ, βₖ).
    pub fn update_weighted(&self, y: bool, alpha_k: f64, beta_k: f64) -> Self {
        Self {
            k: self.k + 1,
            sum_alpha: self.sum_alpha + alpha_k,
            sum_beta: self.sum_beta + beta_k,
            sum_y: self.sum_y + y as u64,
        }
    }

    pub fn replay(ys: &[bool]) -> Self {
        ys.iter().fold(Self::new(), |s, &y| s.update(y))
    }

    /// Posterior mean and variance of the stage-k success probability.
    pub fn mean_var(&self) -> Result<(f64, f64)> {
        if self.k == 0 {
            return Err(Error::UndefinedState);
        }
        let k = self.k as f64;
        let y = self.sum_y as f64;
        let a = self.sum_alpha + y;
        let b = self.sum_beta + k - y;
        let tot = a + b;
        Ok((a / tot, a * b / (tot * tot * (1.0 + tot))))
    }
}

/// Posterior from a single stage with prior Beta(αₖ, βₖ) and one indicator.
pub fn beta_nonrecursive_mean_var(alpha_k: f64, beta_k: f64, y: bool) -> (f64, f64) {
    let y = y as u8 as f64;
    let tot = 1.0 + alpha_k + beta_k;
    let mean = (alpha_k + y) / tot;
    let var = (alpha_k + y) * (1.0 + beta_k - y) / (tot * tot * (2.0 + alpha_k + beta_k));
    (mean, var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletRecursionState {
    pub m: usize,
    pub k: u64,
    pub base_mass: f64,
    pub counts: Vec<u64>,
}

impl DirichletRecursionState {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Input(format!("Dirichlet needs M >= 2, got {m}")));
        }
        Ok(Self { m, k: 0, base_mass: 0.0, counts: vec![0; m] })
    }

    /// Record one draw in 1-based `category`.
    pub fn update(&mut self, category: usize) -> Result<()> {
        if category == 0 || category > self.m {
            return Err(Error::CategoryRange { got: category, max: self.m });
        }
        self.k += 1;
        self.base_mass += inverse_square(self.k);
        self.counts[category - 1] += 1;
        Ok(())
    }

    pub fn mean_var(&self, m: usize) -> Result<(f64, f64)> {
        if self.k == 0 {
            return Err(Error::UndefinedState);
        }
        if m == 0 || m > self.m {
            return Err(Error::CategoryRange { got: m, max: self.m });
        }
        let s = self.base_mass;
        let k = self.k as f64;
        let c = self.counts[m - 1] as f64;
        let big_m = self.m as f64;
        let tot = big_m * s + k;
        let mean = (s + c) / tot;
        let var = (s + c) * ((big_m - 1.0) * s + k - c) / (tot * tot * (tot + 1.0));
        Ok((mean, var))
    }

    pub fn means(&self) -> Result<Vec<f64>> {
        (1..=self.m).map(|m| self.mean_var(m).map(|p| p.0)).collect()
    }
}

/// Dirichlet-process recursion with base measure G(m) = 2^{-m}, m ≥ 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DpRecursionState {
    pub k: u64,
    pub base_mass: f64,
    pub counts: BTreeMap<usize, u64>,
}

impl DpRecursionState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, category: usize) -> Result<()> {
        if category == 0 {
            return Err(Error::CategoryRange { got: 0, max: usize::MAX });
        }
        self.k += 1;
        self.base_mass += inverse_square(self.k);
        *self.counts.entry(category).or_insert(0) += 1;
        Ok(())
    }

    fn count(&self, m: usize) -> f64 {
        self.counts.get(&m).copied().unwrap_or(0) as f64
    }

    /// Mean follows the geometric base; the variance keeps the full base
    /// mass in the first factor rather than the geometric share.
    pub fn mean_var(&self, m: usize) -> Result<(f64, f64)> {
        if self.k == 0 {
            return Err(Error::UndefinedState);
        }
        if m == 0 {
            return Err(Error::CategoryRange { got: 0, max: usize::MAX });
        }
        let s = self.base_mass;
        let k = self.k as f64;
        let c = self.count(m);
        let g = 0.5f64.powi(m.min(1100) as i32);
        let tot = s + k;
        let mean = (g * s + c) / tot;
        let var = (s + c) * ((1.0 - g) * s + k - c) / (tot * tot * (tot + 1.0));
        Ok((mean, var))
    }

    /// Σ_{m>upto} mean(m) in closed form, for categories never visited beyond `upto`.
    pub fn tail_mass(&self, upto: usize) -> Result<f64> {
        if self.k == 0 {
            return Err(Error::UndefinedState);
        }
        let s = self.base_mass;
        let tot = s + self.k as f64;
        let visited: f64 = self.counts.range(upto + 1..).map(|(_, &c)| c as f64).sum();
        let geo = 0.5f64.powi(upto.min(1100) as i32);
        Ok((geo * s + visited) / tot)
    }

    pub fn max_category(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}
