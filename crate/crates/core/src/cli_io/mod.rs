//! Configuration, sweeps, file output and verification reports behind the
//! command-line tool.

pub mod config;
pub mod output;
pub mod sweep;
pub mod verify;

pub use config::{config_from_text, parse_range, OutputFormat, RunConfig, RungRange};
pub use output::{parse_csv, write_csv, write_sweep_files, CSV_HEADER};
pub use sweep::{compute_point, run_sweep, window_rho, SweepRow};
pub use verify::{blocks_table, verify, VerifyReport};
