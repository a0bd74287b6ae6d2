//! Additive transformation-based MCMC and its convergence diagnosis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bounds::BoundState;
use crate::detect::{detect_strict, DetectionReport, VerdictRule};
use crate::error::{Error, Result};
use crate::partition::sequential_blocks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmcmcConfig {
    pub d: usize,
    pub ell: f64,
    /// Per-coordinate scales aⱼ; empty means all ones.
    #[serde(default)]
    pub a: Vec<f64>,
    pub seed: u64,
}

impl TmcmcConfig {
    pub fn new(d: usize, ell: f64, seed: u64) -> Self {
        Self { d, ell, a: Vec::new(), seed }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || !(self.ell > 0.0) {
            return Err(Error::Input("TMCMC needs d >= 1 and ell > 0".into()));
        }
        if !self.a.is_empty() && self.a.len() != self.d {
            return Err(Error::Input("scale vector length differs from d".into()));
        }
        Ok(())
    }

    fn scale(&self, j: usize) -> f64 {
        if self.a.is_empty() {
            1.0
        } else {
            self.a[j]
        }
    }
}

/// Randomness consumed by one move, exposed so tests can replay moves.
#[derive(Debug, Clone, PartialEq)]
pub struct TmcmcMove {
    pub eta: f64,
    pub signs: Vec<f64>,
    pub u: f64,
}

pub fn draw_move(cfg: &TmcmcConfig, rng: &mut ChaCha8Rng) -> TmcmcMove {
    let sd = cfg.ell / (cfg.d as f64).sqrt();
    let normal = Normal::new(0.0, sd).expect("positive sd");
    let eta = loop {
        let e: f64 = normal.sample(rng);
        if e > 0.0 {
            break e;
        }
    };
    let signs = (0..cfg.d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    TmcmcMove { eta, signs, u: rng.random::<f64>() }
}

/// Apply a drawn move; returns the new log density when accepted.
pub fn apply_move<F: Fn(&[f64]) -> f64>(
    x: &mut Vec<f64>,
    logp: f64,
    mv: &TmcmcMove,
    log_target: &F,
    cfg: &TmcmcConfig,
) -> Option<f64> {
    let prop: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, &v)| v + mv.signs[j] * cfg.scale(j) * mv.eta)
        .collect();
    let lp = log_target(&prop);
    if !lp.is_finite() {
        return None;
    }
    let ratio = lp - logp;
    if ratio >= 0.0 || mv.u.ln() < ratio {
        *x = prop;
        Some(lp)
    } else {
        None
    }
}

/// Single additive-TMCMC step. Returns whether the proposal was accepted.
pub fn tmcmc_step<F: Fn(&[f64]) -> f64>(
    x: &mut Vec<f64>,
    log_target: &F,
    cfg: &TmcmcConfig,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let logp = log_target(x);
    if !logp.is_finite() {
        return Err(Error::Input("log target not finite at the current state".into()));
    }
    let mv = draw_move(cfg, rng);
    Ok(apply_move(x, logp, &mv, log_target, cfg).is_some())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    /// First coordinate after every iteration.
    pub first: Vec<f64>,
    pub accepted: u64,
    pub iterations: u64,
}

impl Chain {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.iterations as f64
    }
}

pub fn tmcmc_run<F: Fn(&[f64]) -> f64>(init: &[f64], log_target: F, cfg: &TmcmcConfig, n_iter: usize) -> Result<Chain> {
    cfg.validate()?;
    if init.len() != cfg.d || n_iter == 0 {
        return Err(Error::Input("initial state must have length d and n_iter >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = init.to_vec();
    let mut logp = log_target(&x);
    if !logp.is_finite() {
        return Err(Error::Input("log target not finite at the initial state".into()));
    }
    let mut first = Vec::with_capacity(n_iter);
    let mut accepted = 0;
    for _ in 0..n_iter {
        let mv = draw_move(cfg, &mut rng);
        if let Some(lp) = apply_move(&mut x, logp, &mv, &log_target, cfg) {
            logp = lp;
            accepted += 1;
        }
        first.push(x[0]);
    }
    Ok(Chain { first, accepted, iterations: n_iter as u64 })
}

/// Σ −xⱼ²/2
pub fn std_normal_product(x: &[f64]) -> f64 {
    -0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

/// Product over coordinates of ½N(0,1) + ½N(μ,1).
pub fn normal_mixture_product(mu: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        x.iter()
            .map(|&v| {
                let a = -0.5 * v * v;
                let b = -0.5 * (v - mu) * (v - mu);
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln() - std::f64::consts::LN_2
            })
            .sum()
    }
}

/// Sequential blocks of `n_block` draws fed to the strict detector.
/// Fewer than five blocks is reported Inconclusive.
pub fn diagnose_convergence(chain: &[f64], n_block: usize, bound: BoundState, rule: &VerdictRule) -> Result<DetectionReport> {
    if n_block == 0 || chain.len() < 2 * n_block {
        return Err(Error::Input("chain must hold at least two blocks".into()));
    }
    let part = sequential_blocks(chain.len(), n_block)?;
    let rule = VerdictRule { min_stages: rule.min_stages.max(5), ..*rule };
    detect_strict(chain, &part, bound, &rule)
}
