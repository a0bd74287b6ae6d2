//! Recursive Bayesian characterization of stationarity, point-process
//! structure and oscillation frequencies.
//!
//! Every detector reduces its input to a sequence of statistics sⱼ, compares
//! each with a bound cⱼ, and feeds the indicators yⱼ = 𝕀(sⱼ ≤ cⱼ) to a Beta
//! recursion whose posterior mean is read off as the verdict.

pub mod bounds;
pub mod detect;
pub mod dp_independence;
pub mod empirical;
pub mod error;
pub mod frequency;
pub mod gp;
pub mod io;
pub mod kernels;
pub mod partition;
pub mod point_process;
pub mod presets;
pub mod processes;
pub mod recursive_bayes;
pub mod tmcmc;

pub use bounds::{calibrate_c1, BoundState, CalibrationMode, PolicyKind};
pub use detect::{detect_covariance, detect_strict, fold_statistics, DetectionReport, StageRecord, Verdict, VerdictRule};
pub use error::{Error, Result};
pub use io::VERSION;
pub use partition::{kmeans_partition, sequential_blocks, Partition};
pub use point_process::{PointPattern, Window};
pub use recursive_bayes::{BetaRecursionState, DirichletRecursionState, DpRecursionState};
