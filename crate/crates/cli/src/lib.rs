//! Experiment harness for `manifold-zo-core`: seed sweeps with trace and
//! summary output, estimator diagnostics, and kernel timings.

pub mod bench;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod output;

pub use error::HarnessError;

use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "MANIFOLD_ZO_OUT";

/// `--out`, then the config's own directory, then `$MANIFOLD_ZO_OUT`, then `./out`.
pub fn resolve_out_dir(flag: Option<&Path>, from_config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag.or(from_config) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("out"),
    }
}
