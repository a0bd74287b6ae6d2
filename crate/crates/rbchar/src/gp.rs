//! Gaussian-process sampling by Cholesky factorisation and the
//! space-time autoregressive field generator.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::CovKernel;

pub const DEFAULT_GP_CAP: usize = 20_000;
const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Dense lower-triangular factor stored row by row.
#[derive(Debug, Clone)]
pub struct Cholesky {
    rows: Vec<Vec<f64>>,
    pub jitter: f64,
}

impl Cholesky {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// L z
    pub fn mul(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|r| r.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn try_cholesky(a: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| Vec::with_capacity(i + 1)).collect();
    for j in 0..n {
        let rj: Vec<f64> = rows[j].clone();
        let diag = a[j][j] + jitter - rj.iter().map(|v| v * v).sum::<f64>();
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        rows[j].push(ljj);
        rows[j + 1..].par_iter_mut().enumerate().for_each(|(off, ri)| {
            let i = j + 1 + off;
            let dot: f64 = ri.iter().zip(&rj).map(|(x, y)| x * y).sum();
            ri.push((a[i][j] - dot) / ljj);
        });
    }
    Some(rows)
}

/// Cholesky of `a + jitter I`, walking the jitter ladder 1e−10 → 1e−6.
pub fn cholesky_jittered(a: &[Vec<f64>]) -> Result<Cholesky> {
    for &jit in &JITTER_LADDER {
        if let Some(rows) = try_cholesky(a, jit) {
            return Ok(Cholesky { rows, jitter: jit });
        }
    }
    Err(Error::SingularKernel)
}

pub fn kernel_matrix(kernel: &CovKernel, locations: &[Vec<f64>]) -> Vec<Vec<f64>> {
    locations
        .par_iter()
        .map(|a| locations.iter().map(|b| kernel.eval(a, b)).collect())
        .collect()
}

fn check_locations(kernel: &CovKernel, locations: &[Vec<f64>], cap: usize) -> Result<()> {
    kernel.validate()?;
    if locations.len() > cap {
        return Err(Error::Input(format!("{} locations exceed the GP cap {cap}", locations.len())));
    }
    Ok(())
}

/// Factor once, then draw as many fields as needed.
pub fn gp_factor(kernel: &CovKernel, locations: &[Vec<f64>]) -> Result<Cholesky> {
    check_locations(kernel, locations, DEFAULT_GP_CAP)?;
    cholesky_jittered(&kernel_matrix(kernel, locations))
}

pub fn standard_normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Zero-mean Gaussian field at `locations`.
pub fn gp_sample(kernel: &CovKernel, locations: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
    if locations.is_empty() {
        return Ok(Vec::new());
    }
    let l = gp_factor(kernel, locations)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = standard_normals(locations.len(), &mut rng);
    Ok(l.mul(&z))
}

/// Innovation multiplier m(t) in the space-time recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    Constant,
    /// 1.3 + sin(2πt/period)
    Sinusoidal { period: f64 },
}

impl Modulation {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Modulation::Constant => 1.0,
            Modulation::Sinusoidal { period } => 1.3 + (2.0 * PI * t as f64 / period).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeSpec {
    pub kernel: CovKernel,
    pub rho_t: f64,
    pub modulation: Modulation,
    /// Adds 0.4 · X(s, t−1) · ε(s, t−1).
    pub lag_product: bool,
}

/// X(s,t) = ρ X(s,t−1) [+ 0.4 X(s,t−1) ε(s,t−1)] + m(t) ε(s,t), X(s,0) = 0,
/// with ε independent GP slices. Returns `field[t-1][i]` for t = 1..=T.
pub fn gen_spacetime(spec: &SpaceTimeSpec, locations: &[Vec<f64>], t_len: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if t_len == 0 {
        return Err(Error::Input("T must be at least 1".into()));
    }
    let l = gp_factor(&spec.kernel, locations)?;
    let n = locations.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut eps_prev = vec![0.0; n];
    let mut out = Vec::with_capacity(t_len);
    for t in 1..=t_len {
        let eps = l.mul(&standard_normals(n, &mut rng));
        let m = spec.modulation.at(t);
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = spec.rho_t * x[i] + m * eps[i];
                if spec.lag_product {
                    v += 0.4 * x[i] * eps_prev[i];
                }
                v
            })
            .collect();
        x = next;
        eps_prev = eps;
        out.push(x.clone());
    }
    Ok(out)
}

/// Locations √s̃ with s̃ uniform on [0,1]², componentwise.
pub fn sqrt_uniform_locations(n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.random::<f64>().sqrt(), rng.random::<f64>().sqrt()])
        .collect()
}
