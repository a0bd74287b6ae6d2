//! Named simulation designs used by the CLI, the Python module and the
//! acceptance suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{mult_freq_series, single_freq_series};
use crate::gp::{gen_spacetime, gp_sample, sqrt_uniform_locations, Modulation, SpaceTimeSpec};
use crate::kernels::CovKernel;
use crate::point_process::{
    gen_cluster_const, gen_hpp, gen_ihpp, gen_lgcp, gen_strauss, ClusterKind, PointPattern, Window,
};
use crate::processes::{gen_ar1, gen_ar2, gen_arch1, gen_garch11};
use crate::tmcmc::{normal_mixture_product, std_normal_product, tmcmc_run, TmcmcConfig};

pub const PRESETS: &[&str] = &[
    "ar1",
    "ar2",
    "arch",
    "garch",
    "spatial-stationary",
    "spatial-nonstationary",
    "spatial-mixture",
    "spacetime-s1",
    "spacetime-s2",
    "spacetime-ns1",
    "spacetime-ns2",
    "spacetime-ns3",
    "tmcmc-normal",
    "tmcmc-mixture",
    "hpp",
    "ihpp",
    "matern-cluster",
    "thomas",
    "neyman-scott",
    "strauss",
    "lgcp",
    "single-freq",
    "mult-freq",
];

/// Optional knobs; each preset reads the ones it needs and falls back to
/// the design defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub n: Option<usize>,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub omega: Option<f64>,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub psi: Option<f64>,
    pub t: Option<usize>,
    pub d: Option<usize>,
    pub ell: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
    pub r: Option<f64>,
    pub sigma2: Option<f64>,
    pub m: Option<usize>,
    pub side: Option<f64>,
    pub sigma: Option<f64>,
    pub steps: Option<usize>,
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Series(Vec<f64>),
    /// Locations are `[x, y]` or `[x, y, t]`.
    Field { locations: Vec<Vec<f64>>, values: Vec<f64> },
    Pattern(PointPattern),
}

fn uniform_square(n: usize, half: f64, seed: u64) -> Vec<Vec<f64>> {
    sqrt_uniform_locations(n, seed)
        .into_iter()
        .map(|l| l.iter().map(|v| (v * v * 2.0 - 1.0) * half).collect())
        .collect()
}

/// Flatten `field[t-1][i]` into `[x, y, t]` rows in time-major order.
fn flatten_spacetime(locs: &[Vec<f64>], field: &[Vec<f64>]) -> Dataset {
    let mut locations = Vec::with_capacity(locs.len() * field.len());
    let mut values = Vec::with_capacity(locs.len() * field.len());
    for (t, slice) in field.iter().enumerate() {
        for (l, v) in locs.iter().zip(slice) {
            locations.push(vec![l[0], l[1], (t + 1) as f64]);
            values.push(*v);
        }
    }
    Dataset::Field { locations, values }
}

fn spacetime(name: &str, p: &PresetParams, seed: u64) -> Result<Dataset> {
    let m = p.n.unwrap_or(100);
    let t_len = p.t.unwrap_or(200);
    let psi = p.psi.unwrap_or(1.0);
    let ns = name.ends_with("ns2") || name.ends_with("ns3");
    let lambda = p.lambda.unwrap_or(if ns { 20.0 } else { 5.0 });
    let kernel = if ns { CovKernel::Ns2Anisotropic { lambda } } else { CovKernel::Exponential { psi } };
    let sinus = Modulation::Sinusoidal { period: 400.0 };
    let (modulation, lag_product) = match name {
        "spacetime-s1" => (Modulation::Constant, false),
        "spacetime-s2" => (Modulation::Constant, true),
        "spacetime-ns1" => (sinus, false),
        "spacetime-ns2" => (Modulation::Constant, true),
        _ => (sinus, false),
    };
    let spec = SpaceTimeSpec { kernel, rho_t: p.rho.unwrap_or(0.5), modulation, lag_product };
    let locs = uniform_square(m, lambda / 2.0, seed ^ 0x10c5);
    let field = gen_spacetime(&spec, &locs, t_len, seed)?;
    Ok(flatten_spacetime(&locs, &field))
}

fn pattern(name: &str, p: &PresetParams, seed: u64) -> Result<PointPattern> {
    match name {
        "hpp" => gen_hpp(p.lambda.unwrap_or(1.0), Window::square(p.side.unwrap_or(50.0))?, seed),
        "ihpp" => {
            let side = p.side.unwrap_or(5.0);
            let scale = p.lambda.unwrap_or(100.0);
            gen_ihpp(move |u| scale * (u[0] + u[1]), scale * 2.0 * side, Window::square(side)?, seed)
        }
        "matern-cluster" => gen_cluster_const(
            ClusterKind::Matern { r: p.r.unwrap_or(0.1) },
            p.kappa.unwrap_or(10.0),
            p.mu.unwrap_or(5.0),
            Window::square(p.side.unwrap_or(10.0))?,
            seed,
        ),
        "thomas" => gen_cluster_const(
            ClusterKind::Thomas { sigma2: p.sigma2.unwrap_or(0.01) },
            p.kappa.unwrap_or(10.0),
            p.mu.unwrap_or(5.0),
            Window::square(p.side.unwrap_or(10.0))?,
            seed,
        ),
        "neyman-scott" => gen_cluster_const(
            ClusterKind::NeymanScott { m: p.m.unwrap_or(5), r: p.r.unwrap_or(0.1) },
            p.kappa.unwrap_or(10.0),
            0.0,
            Window::square(p.side.unwrap_or(10.0))?,
            seed,
        ),
        "strauss" => gen_strauss(
            p.beta.unwrap_or(100.0),
            p.gamma.unwrap_or(0.5),
            p.r.unwrap_or(0.05),
            Window::square(p.side.unwrap_or(1.0))?,
            seed,
            p.steps.unwrap_or(100_000),
        ),
        _ => {
            let mu = p.mu.unwrap_or(3.0);
            let kernel = CovKernel::Matern {
                sigma2: p.sigma2.unwrap_or(0.2),
                rho: p.psi.unwrap_or(10.0),
                nu: 0.5,
            };
            gen_lgcp(move |_| mu, &kernel, p.grid.unwrap_or(32), Window::new(0.0, 15.0, 0.0, 20.0)?, seed)
        }
    }
}

/// Simulate the named design.
pub fn generate(name: &str, p: &PresetParams, seed: u64) -> Result<Dataset> {
    match name {
        "ar1" => Ok(Dataset::Series(gen_ar1(p.n.unwrap_or(2500), p.rho.unwrap_or(0.5), seed)?)),
        "ar2" => Ok(Dataset::Series(gen_ar2(
            p.n.unwrap_or(2500),
            p.alpha.unwrap_or(0.3),
            p.beta.unwrap_or(0.4),
            seed,
        )?)),
        "arch" => Ok(Dataset::Series(gen_arch1(
            p.n.unwrap_or(2500),
            p.omega.unwrap_or(1.0),
            p.alpha.unwrap_or(0.5),
            seed,
        )?)),
        "garch" => Ok(Dataset::Series(gen_garch11(
            p.n.unwrap_or(2500),
            p.omega.unwrap_or(1.0),
            p.alpha.unwrap_or(0.4),
            p.beta.unwrap_or(0.3),
            seed,
        )?)),
        "spatial-stationary" | "spatial-nonstationary" | "spatial-mixture" => {
            let kernel = match name {
                "spatial-stationary" => CovKernel::SqexpStationary,
                "spatial-nonstationary" => CovKernel::SqrtWarped,
                _ => CovKernel::Mixture { p: p.p.unwrap_or(0.99) },
            };
            let locations = sqrt_uniform_locations(p.n.unwrap_or(2000), seed ^ 0x10c5);
            let values = gp_sample(&kernel, &locations, seed)?;
            Ok(Dataset::Field { locations, values })
        }
        n if n.starts_with("spacetime-") && PRESETS.contains(&n) => spacetime(n, p, seed),
        "tmcmc-normal" => {
            let d = p.d.unwrap_or(100);
            let cfg = TmcmcConfig::new(d, p.ell.unwrap_or(2.4), seed);
            let chain = tmcmc_run(&vec![0.0; d], std_normal_product, &cfg, p.n.unwrap_or(100_000))?;
            Ok(Dataset::Series(chain.first))
        }
        "tmcmc-mixture" => {
            let cfg = TmcmcConfig::new(1, p.ell.unwrap_or(2.4), seed);
            let target = normal_mixture_product(p.mu.unwrap_or(10.0));
            let chain = tmcmc_run(&[0.0], target, &cfg, p.n.unwrap_or(100_000))?;
            Ok(Dataset::Series(chain.first))
        }
        "hpp" | "ihpp" | "matern-cluster" | "thomas" | "neyman-scott" | "strauss" | "lgcp" => {
            Ok(Dataset::Pattern(pattern(name, p, seed)?))
        }
        "single-freq" => Ok(Dataset::Series(single_freq_series(p.t.unwrap_or(500), p.sigma.unwrap_or(5.0), seed)?)),
        "mult-freq" => Ok(Dataset::Series(mult_freq_series(p.t.unwrap_or(100)))),
        other => Err(Error::Input(format!("unknown preset '{other}'; known: {}", PRESETS.join(", ")))),
    }
}
