//! Shared by the examples that need trained models.
#![allow(dead_code)]

use std::path::Path;

use semharq::experiment::{parse_override, ExperimentConfig};
use semharq::Result;

/// `small.toml` with `key=value` overrides taken from the command line.
/// Artifacts land under `target/example-runs/small` unless `output.dir` is set.
pub fn small_config() -> Result<ExperimentConfig> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap_or(Path::new("."));
    let dir = root.join("target/example-runs/small");
    let mut overrides = vec![parse_override(&format!("output.dir={:?}", dir.display().to_string()))?];
    for arg in std::env::args().skip(1) {
        overrides.push(parse_override(&arg)?);
    }
    ExperimentConfig::from_str_with_overrides(include_str!("../small.toml"), &overrides)
}
