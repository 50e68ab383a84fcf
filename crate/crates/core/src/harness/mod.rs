//! Experiment grids, verification suites and result emission.
//!
//! An [`ExperimentConfig`] is a single JSON document:
//!
//! ```json
//! {
//!   "kind": "nu_grid",
//!   "grid": {"family": "exponential", "param": "c", "start": 1.1, "stop": 15.0, "step": 0.1},
//!   "n": 15000,
//!   "samples": 50,
//!   "seed": 1
//! }
//! ```
//!
//! [`run_experiment`] produces a [`ResultManifest`]; [`emit`] writes it as
//! a CSV with header `param,n,statistic,mean,stderr,samples,seed` and a
//! pretty-printed JSON manifest. Worker count comes from the config, else
//! the `DWT_THREADS` environment variable, else the available parallelism;
//! it never affects the output.

mod analysis;
mod config;
mod emit;
mod exec;
mod experiment;
mod stats;
mod verify;

pub use analysis::{analyze_csv, read_csv, shape_non_decreasing, shape_non_increasing, Analysis, CsvRow, ShapeCheck};
pub use config::{ExperimentConfig, ExperimentKind, ParamGrid, Statistic};
pub use emit::{emit, write_csv, CSV_HEADER};
pub use exec::{map_samples, resolve_threads, THREADS_ENV};
pub use experiment::{run_experiment, ResultManifest, ResultRow};
pub use stats::{chi_square_homogeneity, estimate_beta, histogram, smooth3, BetaFit, ChiSquareTest, StatSummary};
pub use verify::{random_spec, suite_names, verify, CheckResult, VerifyReport};
