//! Configuration, the staged pipeline and result files.

pub mod config;
pub mod pipeline;
pub mod results;

pub use config::{derive_seed, parse_override, ExperimentConfig, Profile};
pub use pipeline::{build_system, build_system_at, pipeline, run_sweep, Layout, TrainedSystem};
pub use results::{emit_csv, load_csv, summarize, ResultRow, SummaryRow};
