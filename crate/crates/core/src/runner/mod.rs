//! Declarative sweeps: configuration, solving with caching, per-point
//! outputs, a result manifest and figure-data emission.

pub mod cache;
pub mod config;
pub mod emit;
pub mod output;
pub mod pipeline;
pub mod solver;

pub use cache::{Cache, CACHE_DIR_ENV};
pub use config::{Analysis, CachePolicy, RunConfig};
pub use emit::{emit_figure_data, Figure};
pub use pipeline::{run_sweep, run_sweep_with, PointRecord, ResultManifest, RunOutcome, Status};
pub use solver::{ExactSolver, Spectrum, SpectrumSolver};
