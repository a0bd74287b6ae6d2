//! Covariance kernels and the order-1 modified Bessel function of the second kind.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// K₁(x) for x > 0. Power series below 2, trapezoidal quadrature of
/// ∫₀^∞ e^{−x cosh t} cosh t dt above.
pub fn bessel_k1(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K1 needs finite x > 0, got {x}")));
    }
    Ok(if x <= 2.0 { k1_series(x) } else { k1_quadrature(x) })
}

fn k1_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    // I₁(x) = (x/2) Σ qᵏ/(k!(k+1)!)
    let mut i1 = 0.0;
    let mut tail = 0.0;
    let mut term = 1.0; // qᵏ/(k!(k+1)!)
    let mut psi_k1 = -EULER_GAMMA; // ψ(k+1)
    for k in 0..60 {
        let psi_k2 = psi_k1 + 1.0 / (k as f64 + 1.0); // ψ(k+2)
        i1 += term;
        tail += (psi_k1 + psi_k2) * term;
        psi_k1 = psi_k2;
        term *= q / ((k as f64 + 1.0) * (k as f64 + 2.0));
        if term < 1e-18 * i1 {
            break;
        }
    }
    let i1 = i1 * x / 2.0;
    1.0 / x + (x / 2.0).ln() * i1 - x / 4.0 * tail
}

fn k1_quadrature(x: f64) -> f64 {
    let h = 0.02_f64;
    let mut sum = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let c = t.cosh();
        let f = (-x * c).exp() * c;
        sum += f;
        if x * c > 745.0 || f < 1e-300 {
            break;
        }
        t += h;
    }
    sum * h
}

/// Spatial or space-time covariance models. Points are `[x, y]` or `[x, y, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovKernel {
    /// exp(−5‖s₁ − s₂‖²)
    SqexpStationary,
    /// exp(−5‖√s₁ − √s₂‖²), square roots taken componentwise
    SqrtWarped,
    /// p · stationary + (1 − p) · warped
    Mixture { p: f64 },
    /// (d/ψ) K₁(d/ψ)
    Whittle { psi: f64 },
    /// exp(−d/ψ)
    Exponential { psi: f64 },
    /// Matérn with ν ∈ {0.5, 1, 1.5, 2.5}
    Matern { sigma2: f64, rho: f64, nu: f64 },
    /// spatial(s₁, s₂) · ρ^{|t₁ − t₂|} / (1 − ρ²)
    SeparableSt { spatial: Box<CovKernel>, rho_t: f64 },
    /// Locally anisotropic kernel with rotation Γ(s/λ) and Λ = diag(1, ½).
    Ns2Anisotropic { lambda: f64 },
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn sqrt_comp(v: f64) -> f64 {
    v.max(0.0).sqrt()
}

fn ns2_sigma(s: &[f64], lambda: f64) -> [[f64; 2]; 2] {
    let u = s[0] / lambda;
    let v = s[1] / lambda;
    let g1 = (u + 0.75).ln();
    let g2 = u * u + v * v;
    // Γ = [[g1, −g2], [g2, g1]], Σ = Γ diag(1, ½) Γᵀ
    let a = g1 * g1 + 0.5 * g2 * g2;
    let b = g1 * g2 - 0.5 * g2 * g1;
    let d = g2 * g2 + 0.5 * g1 * g1;
    [[a, b], [b, d]]
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

impl CovKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            CovKernel::SqexpStationary => {
                let d = dist(a, b);
                (-5.0 * d * d).exp()
            }
            CovKernel::SqrtWarped => {
                let dx = sqrt_comp(a[0]) - sqrt_comp(b[0]);
                let dy = sqrt_comp(a[1]) - sqrt_comp(b[1]);
                (-5.0 * (dx * dx + dy * dy)).exp()
            }
            CovKernel::Mixture { p } => {
                p * CovKernel::SqexpStationary.eval(a, b) + (1.0 - p) * CovKernel::SqrtWarped.eval(a, b)
            }
            CovKernel::Whittle { psi } => {
                let r = dist(a, b) / psi;
                if r == 0.0 {
                    1.0
                } else if r > 700.0 {
                    0.0
                } else {
                    r * bessel_k1(r).unwrap_or(0.0)
                }
            }
            CovKernel::Exponential { psi } => (-dist(a, b) / psi).exp(),
            CovKernel::Matern { sigma2, rho, nu } => matern(dist(a, b), *sigma2, *rho, *nu),
            CovKernel::SeparableSt { spatial, rho_t } => {
                let dt = (a[2] - b[2]).abs();
                spatial.eval(a, b) * rho_t.powf(dt) / (1.0 - rho_t * rho_t)
            }
            CovKernel::Ns2Anisotropic { lambda } => {
                let s1 = ns2_sigma(a, *lambda);
                let s2 = ns2_sigma(b, *lambda);
                let avg = [
                    [(s1[0][0] + s2[0][0]) / 2.0, (s1[0][1] + s2[0][1]) / 2.0],
                    [(s1[1][0] + s2[1][0]) / 2.0, (s1[1][1] + s2[1][1]) / 2.0],
                ];
                let dsum = 4.0 * det2(&avg);
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                // (Σ₁ + Σ₂)⁻¹ = adj / det with Σ₁ + Σ₂ = 2 avg
                let (p, q, r) = (2.0 * avg[0][0], 2.0 * avg[0][1], 2.0 * avg[1][1]);
                let quad = (r * dx * dx - 2.0 * q * dx * dy + p * dy * dy) / dsum;
                let qf = 2.0 * quad;
                det2(&s1).powf(0.25) * det2(&s2).powf(0.25) / det2(&avg).sqrt() * (-qf.max(0.0).sqrt()).exp()
            }
        }
    }

    /// Check the parameters before building a matrix.
    pub fn validate(&self) -> Result<()> {
        match self {
            CovKernel::Mixture { p } if !(0.0..=1.0).contains(p) => Err(Error::Input(format!("mixture weight {p}"))),
            CovKernel::Whittle { psi } | CovKernel::Exponential { psi } if *psi <= 0.0 => {
                Err(Error::Input(format!("range parameter {psi}")))
            }
            CovKernel::Matern { rho, nu, .. } => {
                if *rho <= 0.0 {
                    Err(Error::Input(format!("Matérn range {rho}")))
                } else if ![0.5, 1.0, 1.5, 2.5].contains(nu) {
                    Err(Error::Domain(format!("Matérn smoothness {nu} not supported")))
                } else {
                    Ok(())
                }
            }
            CovKernel::SeparableSt { spatial, rho_t } => {
                if rho_t.abs() >= 1.0 {
                    Err(Error::Input(format!("temporal coefficient {rho_t} must satisfy |ρ| < 1")))
                } else {
                    spatial.validate()
                }
            }
            CovKernel::Ns2Anisotropic { lambda } if *lambda <= 0.0 => Err(Error::Input(format!("lambda {lambda}"))),
            _ => Ok(()),
        }
    }
}

/// Matérn covariance in the √(2ν) d/ρ parameterisation.
pub fn matern(d: f64, sigma2: f64, rho: f64, nu: f64) -> f64 {
    if nu == 0.5 {
        return sigma2 * (-d / rho).exp();
    }
    let r = (2.0 * nu).sqrt() * d / rho;
    if nu == 1.5 {
        sigma2 * (1.0 + r) * (-r).exp()
    } else if nu == 2.5 {
        sigma2 * (1.0 + r + r * r / 3.0) * (-r).exp()
    } else if nu == 1.0 {
        if r == 0.0 {
            sigma2
        } else {
            sigma2 * r * bessel_k1(r).unwrap_or(0.0)
        }
    } else {
        f64::NAN
    }
}
