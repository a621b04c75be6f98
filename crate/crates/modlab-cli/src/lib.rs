//! Command-line front end for the `modlab` estimators.
//!
//! The library half of the binary: config parsing ([`config`]), experiment
//! execution ([`experiment`]) and report rendering ([`output`]). The binary in
//! `main.rs` is a thin argument layer over these modules, and the integration
//! tests drive them directly as well as through the compiled executable.
//!
//! Contract highlights, shared by every experiment kind:
//! - seeds are mandatory and explicit — there is no wall-clock default, so a
//!   run is reproducible from its report alone;
//! - reports are written in one fixed schema
//!   (`experiment,d,j,metric,estimate,se,analytic,bound_rhs,pass,seed`) as CSV
//!   or a JSON mirror of the same columns;
//! - identical (config, seed, workers) produce byte-identical report files;
//! - an experiment whose assertions fail exits with status 2, config or I/O
//!   errors exit 1, and a clean pass exits 0.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use experiment::{default_config, run_experiment, RunOutcome};
pub use output::{write_report, OutRow, ReportMeta};
