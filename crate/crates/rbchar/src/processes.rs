//! Seeded AR(1), AR(2), ARCH(1) and GARCH(1,1) simulators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// X_t = ρ X_{t−1} + ε_t with X₀ ~ U(−1, 1); returns X₁..X_n.
pub fn gen_ar1(n: usize, rho: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Input("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = rng.random_range(-1.0..1.0);
    Ok((0..n)
        .map(|_| {
            x = rho * x + normal(&mut rng);
            x
        })
        .collect())
}

/// x_t = α x_{t−1} + β x_{t−2} + ε_t with x₁ = x₂ = 0.
pub fn gen_ar2(n: usize, alpha: f64, beta: f64, seed: u64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::Input("AR(2) needs n >= 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for t in 2..n {
        x[t] = alpha * x[t - 1] + beta * x[t - 2] + normal(&mut rng);
    }
    Ok(x)
}

pub fn is_stationary_ar2(alpha: f64, beta: f64) -> bool {
    alpha + beta < 1.0 && beta - alpha < 1.0 && beta > -1.0
}

/// x_t = σ_t ε_t, σ_t² = ω + α x_{t−1}², x₁ = 0.
pub fn gen_arch1(n: usize, omega: f64, alpha: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || omega <= 0.0 || alpha < 0.0 {
        return Err(Error::Input("ARCH(1) needs n >= 1, omega > 0, alpha >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for t in 1..n {
        let s2 = omega + alpha * x[t - 1] * x[t - 1];
        x[t] = s2.sqrt() * normal(&mut rng);
    }
    Ok(x)
}

/// x_t = σ_t ε_t, σ_t² = ω + α x_{t−1}² + β σ_{t−1}², x₁ = 0, σ₁ = 0.
pub fn gen_garch11(n: usize, omega: f64, alpha: f64, beta: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || omega <= 0.0 || alpha < 0.0 || beta < 0.0 {
        return Err(Error::Input("GARCH(1,1) needs n >= 1, omega > 0, alpha, beta >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    let mut s2 = 0.0;
    for t in 1..n {
        s2 = omega + alpha * x[t - 1] * x[t - 1] + beta * s2;
        x[t] = s2.sqrt() * normal(&mut rng);
    }
    Ok(x)
}
