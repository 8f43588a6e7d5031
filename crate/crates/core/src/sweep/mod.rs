//! Distance sweeps: configuration, parallel evaluation, output files and
//! zero-crossing search.

mod cli;
mod config;
mod crossing;
mod output;
mod run;

pub use cli::{parse_config, CliArgs};
pub use config::{
    resolve, ConfigDocument, ConfigError, Measurement, OutputFormat, SweepConfig, DEFAULT_DISTANCE_END_KM,
    DEFAULT_DISTANCE_START_KM, DEFAULT_N_POINTS, WORKERS_ENV,
};
pub use crossing::{bisect_sign_change, crossing_bracket, find_zero_crossing, CROSSING_TOLERANCE_KM};
pub use output::{csv_header_document, render, to_csv, to_json, write_atomic, CSV_COLUMNS};
pub use run::{evaluate_point, run_sweep, SweepResultFile, SweepRow};
