use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use rbchar::bounds::{ar1_mle, benchmark_sup_norms, calibrate_c1, default_grid, BoundState, CalibrationMode};
use rbchar::detect::{
    detect_covariance, detect_strict_with, strict_statistics_with, SupNorm, VerdictRule,
};
use rbchar::dp_independence::{detect_poisson, RowMatching};
use rbchar::frequency::{extract_frequencies, run_frequency_recursion, BinSpec, FrequencyConfig};
use rbchar::io::{self as rio, ReportDoc, VERSION};
use rbchar::partition::{kmeans_partition, sequential_blocks, Partition};
use rbchar::point_process::{detect_csr, detect_pp_stationarity_with, PointPattern};
use rbchar::presets::{generate, Dataset, PresetParams, PRESETS};
use rbchar::tmcmc::diagnose_convergence;
use rbchar::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_CALIBRATION: u8 = 3;

#[derive(Parser)]
#[command(name = "rbchar", version = VERSION, about = "Recursive Bayesian characterization of stochastic processes")]
struct Cli {
    /// Worker threads (default: RBCHAR_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a named design to CSV.
    Generate(GenerateArgs),
    /// Strict stationarity of a series, spatial or spatio-temporal field.
    DetectStationarity(StationarityArgs),
    /// Covariance stationarity of a spatial field over distance bands.
    DetectCovariance(CovarianceArgs),
    /// Convergence diagnosis of an MCMC chain.
    McmcDiagnose(McmcArgs),
    /// Complete spatial randomness of a point pattern.
    DetectCsr(PatternArgs),
    /// Poisson check through mutual independence of cluster distances.
    DetectPoisson(PoissonArgs),
    /// Stationarity of a point pattern through nearest-neighbour marks.
    DetectPpStationarity(PpStationarityArgs),
    /// Oscillation frequencies of a series.
    DetectFrequency(FrequencyArgs),
    /// Choose the nonparametric Ĉ₁ from benchmark data.
    CalibrateC1(CalibrateArgs),
}

#[derive(Args, Serialize)]
struct Output {
    /// Report path (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Trajectory CSV path (default: next to the report).
    #[arg(long)]
    #[serde(skip)]
    trajectory: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long)]
    preset: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
}

impl GenerateArgs {
    fn params(&self) -> PresetParams {
        PresetParams {
            n: self.n,
            rho: self.rho,
            alpha: self.alpha,
            beta: self.beta,
            omega: self.omega,
            gamma: self.gamma,
            p: self.p,
            psi: self.psi,
            t: self.t,
            d: self.d,
            ell: self.ell,
            mu: self.mu,
            lambda: self.lambda,
            kappa: self.kappa,
            r: self.r,
            sigma2: self.sigma2,
            m: self.m,
            side: self.side,
            sigma: self.sigma,
            steps: self.steps,
            grid: self.grid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum BoundKind {
    Nonparametric,
    Parametric,
    Adaptive,
    Constant,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum NormKind {
    Shortcut,
    Exact,
}

impl From<NormKind> for SupNorm {
    fn from(k: NormKind) -> Self {
        match k {
            NormKind::Shortcut => SupNorm::Shortcut,
            NormKind::Exact => SupNorm::Exact,
        }
    }
}

#[derive(Args, Serialize)]
struct BoundArgs {
    #[arg(long, value_enum, default_value = "nonparametric")]
    bound: BoundKind,
    /// Ĉ₁ for the nonparametric policy, or the fixed bound for `constant`.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Benchmark series (CSV `value`) giving c̃ⱼ for parametric/adaptive bounds.
    #[arg(long)]
    benchmark: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    theta_hi: f64,
    #[arg(long, default_value_t = 0.2)]
    theta_lo: f64,
    #[arg(long, default_value_t = 0.2)]
    tail_fraction: f64,
}

impl BoundArgs {
    fn rule(&self) -> Result<VerdictRule, Error> {
        if !(0.0 <= self.theta_lo && self.theta_lo < self.theta_hi && self.theta_hi <= 1.0) {
            return Err(Error::Input("need 0 <= theta_lo < theta_hi <= 1".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::Input("tail fraction must be in (0, 1]".into()));
        }
        Ok(VerdictRule {
            theta_hi: self.theta_hi,
            theta_lo: self.theta_lo,
            tail_fraction: self.tail_fraction,
            min_stages: 1,
        })
    }

    /// Bound state; parametric policies need the data series for ρ̂ and a
    /// benchmark split into blocks of `block`.
    fn state(&self, series: &[f64], block: usize) -> Result<BoundState, Error> {
        match self.bound {
            BoundKind::Nonparametric => Ok(BoundState::nonparametric(self.c1)),
            BoundKind::Constant => Ok(BoundState::constant(self.c1)),
            BoundKind::Parametric | BoundKind::Adaptive => {
                let path = self
                    .benchmark
                    .as_ref()
                    .ok_or_else(|| Error::Input("parametric and adaptive bounds need --benchmark".into()))?;
                let bench = benchmark_sup_norms(&rio::read_series(path)?, block)?;
                let rho = ar1_mle(series)?;
                Ok(match self.bound {
                    BoundKind::Parametric => BoundState::parametric(rho, bench),
                    _ => BoundState::adaptive(rho, bench),
                })
            }
        }
    }
}

#[derive(Args, Serialize)]
struct PartitionArgs {
    /// Number of sequential blocks for a series (ignored with --block-size).
    #[arg(long)]
    blocks: Option<usize>,
    /// Observations per sequential block.
    #[arg(long)]
    block_size: Option<usize>,
    /// K-means clusters for fields and patterns.
    #[arg(long)]
    clusters: Option<usize>,
    /// Smallest cluster kept by K-means.
    #[arg(long, default_value_t = 10)]
    min_size: usize,
}

#[derive(Args, Serialize)]
struct StationarityArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    partition: PartitionArgs,
    #[command(flatten)]
    bound: BoundArgs,
    #[arg(long, value_enum, default_value = "shortcut")]
    sup_norm: NormKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct CovarianceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 100)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    min_size: usize,
    /// Band boundaries h₀ < h₁ < … (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.03,0.04")]
    bands: Vec<f64>,
    #[command(flatten)]
    bound: BoundArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct McmcArgs {
    /// Chain CSV (`value`); alternative to --preset.
    #[arg(long = "in", conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// tmcmc-normal or tmcmc-mixture.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    /// Chain length for presets.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 500)]
    block_size: usize,
    #[command(flatten)]
    bound: BoundArgs,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct PatternArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 50)]
    clusters: usize,
    #[command(flatten)]
    bound: BoundArgs,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Args, Serialize)]
struct PpStationarityArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    #[arg(long, value_enum, default_value = "shortcut")]
    sup_norm: NormKind,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum MatchingKind {
    Sorted,
    Random,
}

#[derive(Args, Serialize)]
struct PoissonArgs {
    #[command(flatten)]
    pattern: PatternArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "sorted")]
    matching: MatchingKind,
}

#[derive(Args, Serialize)]
struct FrequencyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    r: f64,
    /// Number of bins; omit with --infinite.
    #[arg(long = "M", conflicts_with = "infinite")]
    bins: Option<usize>,
    /// Geometric bins 2^{-m} under a Dirichlet-process prior.
    #[arg(long)]
    infinite: bool,
    #[arg(long, default_value_t = 1.0)]
    multiplier: f64,
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    #[arg(long)]
    center: bool,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    #[command(flatten)]
    #[serde(skip)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeKind {
    MinForStationary,
    MaxForNonstationary,
    Discriminating,
}

#[derive(Args, Serialize)]
struct CalibrateArgs {
    /// Benchmark data (series, field or pattern marks).
    #[arg(long)]
    bench: PathBuf,
    /// Contrast data for discriminating mode.
    #[arg(long)]
    contrast: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "discriminating")]
    mode: ModeKind,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Candidate grid lo:hi:step.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum, default_value = "shortcut")]
    sup_norm: NormKind,
    #[arg(long, default_value_t = 0.8)]
    theta_hi: f64,
    #[arg(long, default_value_t = 0.2)]
    theta_lo: f64,
    #[arg(long, default_value_t = 0.2)]
    tail_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

fn config<T: Serialize>(cmd: &str, args: &T) -> Value {
    let mut v = serde_json::to_value(args).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("subcommand".into(), json!(cmd));
    }
    v
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn trajectory_path(out: &Output) -> Option<PathBuf> {
    out.trajectory
        .clone()
        .or_else(|| out.out.as_ref().map(|p| p.with_extension("trajectory.csv")))
}

fn emit(doc: &ReportDoc, out: &Output) -> Result<(), Error> {
    let mut w = writer(out.out.as_deref())?;
    writeln!(w, "{}", doc.to_json()?)?;
    w.flush()?;
    if let Some(p) = trajectory_path(out) {
        let stages: Vec<_> = if doc.stages.is_empty() {
            doc.bands.iter().filter_map(|b| b.report.as_ref()).flat_map(|r| r.stages.clone()).collect()
        } else {
            doc.stages.clone()
        };
        rio::write_trajectory_csv(File::create(p)?, &stages)?;
    }
    Ok(())
}

/// Input table with its column layout.
enum Table {
    Series(Vec<f64>),
    Field(Vec<Vec<f64>>, Vec<f64>),
}

fn read_table(path: &Path) -> Result<Table, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .unwrap_or("")
        .to_ascii_lowercase();
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.contains(&"t") {
        let (l, v) = rio::parse_spacetime(&text)?;
        Ok(Table::Field(l, v))
    } else if cols.contains(&"x") {
        let (l, v) = rio::parse_spatial(&text)?;
        Ok(Table::Field(l, v))
    } else {
        Ok(Table::Series(rio::parse_series(&text)?))
    }
}

fn series_partition(n: usize, p: &PartitionArgs) -> Result<Partition, Error> {
    let size = match (p.block_size, p.blocks) {
        (Some(s), _) => s,
        (None, Some(k)) if k >= 2 => n / k,
        _ => return Err(Error::Input("give --blocks K or --block-size n".into())),
    };
    sequential_blocks(n, size)
}

fn field_partition(locs: &[Vec<f64>], p: &PartitionArgs, seed: u64) -> Result<Partition, Error> {
    let k = p.clusters.ok_or_else(|| Error::Input("fields need --clusters K".into()))?;
    kmeans_partition(locs, k, p.min_size, seed)
}

fn table_partition(t: &Table, p: &PartitionArgs, seed: u64) -> Result<(Vec<f64>, Partition), Error> {
    match t {
        Table::Series(v) => Ok((v.clone(), series_partition(v.len(), p)?)),
        Table::Field(l, v) => Ok((v.clone(), field_partition(l, p, seed)?)),
    }
}

fn run_generate(a: &GenerateArgs) -> Result<(), Error> {
    if !PRESETS.contains(&a.preset.as_str()) {
        return Err(Error::Input(format!("unknown preset '{}'; known: {}", a.preset, PRESETS.join(", "))));
    }
    let data = generate(&a.preset, &a.params(), a.seed)?;
    let w = writer(a.out.as_deref())?;
    match data {
        Dataset::Series(v) => rio::write_series(w, &v),
        Dataset::Field { locations, values } => rio::write_field(w, &locations, &values),
        Dataset::Pattern(p) => rio::write_pattern(w, &p),
    }
}

fn run_stationarity(a: &StationarityArgs) -> Result<(), Error> {
    let table = read_table(&a.input)?;
    let (values, part) = table_partition(&table, &a.partition, a.seed)?;
    let block = part.sizes().first().copied().unwrap_or(1);
    let bound = a.bound.state(&values, block)?;
    let mut r = detect_strict_with(&values, &part, a.sup_norm.into(), bound, &a.bound.rule()?)?;
    r.seed = Some(a.seed);
    emit(&ReportDoc::from_detection(&r, config("detect-stationarity", a)), &a.output)
}

fn run_covariance(a: &CovarianceArgs) -> Result<(), Error> {
    let (locs, values) = match read_table(&a.input)? {
        Table::Field(l, v) => (l, v),
        Table::Series(_) => return Err(Error::Input("covariance detection needs an x,y,value field".into())),
    };
    let part = kmeans_partition(&locs, a.clusters, a.min_size, a.seed)?;
    let bound = a.bound.state(&values, part.sizes()[0])?;
    let cfg = config("detect-covariance", a);
    let doc = match detect_covariance(&values, &locs, &part, &a.bands, bound, &a.bound.rule()?) {
        Ok(r) => ReportDoc {
            verdict: Some(r.verdict),
            stages: Vec::new(),
            bands: r.bands,
            config: cfg,
            seed: Some(a.seed),
            version: VERSION.into(),
        },
        Err(Error::NotVerifiable) => {
            eprintln!("warning: no valid distance band; covariance stationarity cannot be verified");
            ReportDoc { verdict: None, stages: Vec::new(), bands: Vec::new(), config: cfg, seed: Some(a.seed), version: VERSION.into() }
        }
        Err(e) => return Err(e),
    };
    emit(&doc, &a.output)
}

fn run_mcmc(a: &McmcArgs) -> Result<(), Error> {
    let chain = match (&a.input, &a.preset) {
        (Some(p), None) => rio::read_series(p)?,
        (None, Some(name)) if name.starts_with("tmcmc-") => {
            let seed = a.seed.ok_or_else(|| Error::Input("presets need --seed".into()))?;
            let params = PresetParams { ell: a.ell, d: a.d, mu: a.mu, n: a.iterations, ..Default::default() };
            match generate(name, &params, seed)? {
                Dataset::Series(v) => v,
                _ => unreachable!("tmcmc presets produce series"),
            }
        }
        (None, Some(name)) => return Err(Error::Input(format!("'{name}' is not a tmcmc preset"))),
        _ => return Err(Error::Input("give exactly one of --in or --preset".into())),
    };
    let bound = a.bound.state(&chain, a.block_size)?;
    let mut r = diagnose_convergence(&chain, a.block_size, bound, &a.bound.rule()?)?;
    r.seed = a.seed;
    emit(&ReportDoc::from_detection(&r, config("mcmc-diagnose", a)), &a.output)
}

fn read_pattern(path: &Path) -> Result<PointPattern, Error> {
    let (p, guessed) = rio::read_pattern(path)?;
    if guessed {
        eprintln!("warning: no '# window' line in {}; using the bounding box", path.display());
    }
    Ok(p)
}

fn pattern_bound(b: &BoundArgs) -> Result<BoundState, Error> {
    match b.bound {
        BoundKind::Nonparametric => Ok(BoundState::nonparametric(b.c1)),
        BoundKind::Constant => Ok(BoundState::constant(b.c1)),
        _ => Err(Error::Input("point-pattern detectors take nonparametric or constant bounds".into())),
    }
}

fn run_csr(a: &PatternArgs) -> Result<(), Error> {
    let pat = read_pattern(&a.input)?;
    let r = detect_csr(&pat, a.clusters, pattern_bound(&a.bound)?, &a.bound.rule()?, a.seed)?;
    emit(&ReportDoc::from_detection(&r, config("detect-csr", a)), &a.output)
}

fn run_pp_stationarity(a: &PpStationarityArgs) -> Result<(), Error> {
    let p = &a.pattern;
    let pat = read_pattern(&p.input)?;
    let r = detect_pp_stationarity_with(&pat, p.clusters, a.sup_norm.into(), pattern_bound(&p.bound)?, &p.bound.rule()?, p.seed)?;
    emit(&ReportDoc::from_detection(&r, config("detect-pp-stationarity", a)), &p.output)
}

fn run_poisson(a: &PoissonArgs) -> Result<(), Error> {
    let p = &a.pattern;
    let pat = read_pattern(&p.input)?;
    let matching = match a.matching {
        MatchingKind::Sorted => RowMatching::SortedLocation,
        MatchingKind::Random => RowMatching::Random { seed: p.seed },
    };
    let r = detect_poisson(&pat, p.clusters, a.alpha, matching, pattern_bound(&p.bound)?, &p.bound.rule()?, p.seed)?;
    emit(&ReportDoc::from_detection(&r, config("detect-poisson", a)), &p.output)
}

fn run_frequency(a: &FrequencyArgs) -> Result<(), Error> {
    let series = rio::read_series(&a.input)?;
    let bins = if a.infinite {
        BinSpec::Infinite
    } else {
        BinSpec::Finite { m: a.bins.ok_or_else(|| Error::Input("give --M or --infinite".into()))?, q: Vec::new() }
    };
    let cfg = FrequencyConfig {
        r: a.r,
        multiplier: a.multiplier,
        bins,
        epsilon_group: a.epsilon,
        center: a.center,
        record_every: a.record_every,
    };
    let run = run_frequency_recursion(&series, &cfg)?;
    let freqs = extract_frequencies(&run.final_means, a.epsilon);
    let doc = json!({
        "frequencies": freqs,
        "final_means": run.final_means,
        "final_vars": run.final_vars,
        "config": config("detect-frequency", a),
        "version": VERSION,
    });
    let mut w = writer(a.output.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?)?;
    w.flush()?;
    if let Some(p) = trajectory_path(&a.output) {
        rio::write_frequency_csv(File::create(p)?, &run)?;
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Input(format!("grid '{s}' is not lo:hi:step")))?;
    if parts.len() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0] {
        return Err(Error::Input(format!("grid '{s}' is not lo:hi:step")));
    }
    let n = ((parts[1] - parts[0]) / parts[2] + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| parts[0] + i as f64 * parts[2]).collect())
}

fn calibration_stats(path: &Path, a: &CalibrateArgs) -> Result<Vec<f64>, Error> {
    let t = read_table(path)?;
    let (values, part) = table_partition(&t, &a.partition, a.seed)?;
    strict_statistics_with(&values, &part, a.sup_norm.into())
}

fn run_calibrate(a: &CalibrateArgs) -> Result<(), Error> {
    let bench = vec![calibration_stats(&a.bench, a)?];
    let contrast = match &a.contrast {
        Some(p) => vec![calibration_stats(p, a)?],
        None => Vec::new(),
    };
    let mode = match a.mode {
        ModeKind::MinForStationary => CalibrationMode::MinForStationary,
        ModeKind::MaxForNonstationary => CalibrationMode::MaxForNonstationary,
        ModeKind::Discriminating => CalibrationMode::Discriminating,
    };
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => default_grid(),
    };
    let rule = VerdictRule {
        theta_hi: a.theta_hi,
        theta_lo: a.theta_lo,
        tail_fraction: a.tail_fraction,
        min_stages: 1,
    };
    let c1 = calibrate_c1(&bench, &contrast, mode, &grid, &rule)?;
    let doc = json!({ "c1": c1, "config": config("calibrate-c1", a), "version": VERSION });
    let mut w = writer(a.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.cmd {
        Command::Generate(a) => run_generate(a),
        Command::DetectStationarity(a) => run_stationarity(a),
        Command::DetectCovariance(a) => run_covariance(a),
        Command::McmcDiagnose(a) => run_mcmc(a),
        Command::DetectCsr(a) => run_csr(a),
        Command::DetectPoisson(a) => run_poisson(a),
        Command::DetectPpStationarity(a) => run_pp_stationarity(a),
        Command::DetectFrequency(a) => run_frequency(a),
        Command::CalibrateC1(a) => run_calibrate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("RBCHAR_THREADS").ok().and_then(|s| s.parse().ok()));
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Calibration(_) => EXIT_CALIBRATION,
                _ => EXIT_INPUT,
            })
        }
    }
}
