//! Reproducible command pipeline behind the `cfdir` binary.
//!
//! Exit codes: 0 success, 2 configuration or argument problems, 3 I/O and
//! overwrite refusals, 4 domain failures (degenerate directions, missing
//! baselines, model errors), 5 internal errors.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{
    cmd_attribute, cmd_bench_init, cmd_discover, cmd_explain, cmd_verify, Ctx, World,
};
pub use config::{BenchmarkThresholds, RunConfig};
pub use report::{ManifestEntry, RunReport, StageTiming};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

/// Maps an error to the documented exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Parse(_) => EXIT_CONFIG,
        Error::Io(_) | Error::WouldOverwrite(_) => EXIT_IO,
        Error::DimensionMismatch(_)
        | Error::NonFinite(_)
        | Error::NonConvergence { .. }
        | Error::DegenerateDirection(_)
        | Error::SourceNotPositive(_)
        | Error::NoBaselineFound { .. }
        | Error::MismatchedCoverage(_)
        | Error::SampleFailed { .. }
        | Error::TrainingDiverged { .. }
        | Error::Remote(_)
        | Error::Verification(_) => EXIT_DOMAIN,
    }
}
