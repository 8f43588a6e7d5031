//! Asymptotic secret key rates for continuous-variable QKD under thermal loss
//! and Gaussian phase noise.
//!
//! The crate has two numerical backends. [`gaussian`] works with covariance
//! matrices and is exact for Gaussian pipelines. [`fock`] simulates truncated
//! Fock-space states and handles the non-Gaussian quantum-scissor relay.
//! [`protocols`] assembles both into key-rate results and [`sweep`] drives
//! distance sweeps for the command-line tool.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod keyrate;
pub mod optics;
pub mod protocols;
pub mod sweep;

pub use error::{Error, Result};
