use std::path::PathBuf;

use clap::Parser;

use super::config::{resolve, ConfigDocument, ConfigError, Measurement, OutputFormat, SweepConfig};
use crate::protocols::{ScissorTransmissivity, UaModel, Variant};

/// Key-rate versus distance sweeps for CV-QKD protocols.
///
/// Settings come from command-line flags, then from the `--config` JSON
/// file, then from built-in defaults. The default worker count can be set
/// with the CVQKD_WORKERS environment variable.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "cvqkd", version)]
pub struct CliArgs {
    /// JSON file with any of the settings below, keyed by their snake_case names.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<Variant>,
    /// Phase-noise standard deviation in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Excess noise per link in shot-noise units.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Reconciliation efficiency.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Fixed two-mode squeezing.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "optimize_r")]
    pub r: Option<f64>,
    /// Pick the best squeezing per distance from a grid.
    #[arg(long)]
    pub optimize_r: bool,
    /// Comma-separated squeezing grid for --optimize-r.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub r_grid: Option<Vec<f64>>,
    /// Copies in the averaging network, 2 or 4
    #[arg(long)]
    pub ua_copies: Option<usize>,
    #[arg(long, value_enum)]
    pub ua_model: Option<UaModel>,
    /// Scissor beamsplitter transmissivity, or `auto`.
    #[arg(long, value_name = "T|auto", allow_negative_numbers = true)]
    pub scissor_t: Option<ScissorTransmissivity>,
    /// Fraction of the distance between Alice and the relay.
    #[arg(long, allow_negative_numbers = true)]
    pub relay_position: Option<f64>,
    /// Keep Bob's relay arm free of phase noise.
    #[arg(long)]
    pub no_bob_phase_noise: bool,
    #[arg(long, value_enum)]
    pub alice_measurement: Option<Measurement>,
    #[arg(long, value_enum)]
    pub bob_measurement: Option<Measurement>,
    /// Distance grid in km as start:end:points.
    #[arg(long, value_name = "START:END:POINTS", allow_hyphen_values = true)]
    pub distance: Option<String>,
    /// Space distances geometrically instead of linearly.
    #[arg(long)]
    pub log_spacing: bool,
    /// Fock cutoff for relay protocols.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Largest squeezed-state weight allowed above the cutoff.
    #[arg(long, allow_negative_numbers = true)]
    pub leakage_tolerance: Option<f64>,
    /// Phase-noise samples per point
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Seed for the phase-noise streams
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fiber loss in dB/km.
    #[arg(long, allow_negative_numbers = true)]
    pub loss_db_per_km: Option<f64>,
    /// Halve the key rate for basis sifting.
    #[arg(long)]
    pub sifting: bool,
    /// Parallel worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Also locate where the raw key rate first turns non-positive.
    #[arg(long)]
    pub crossing: bool,
}

fn parse_distance(text: &str) -> Result<(f64, f64, usize), ConfigError> {
    let err = || ConfigError::new("distance", format!("`{text}` is not START:END:POINTS"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(err());
    }
    let start = parts[0].trim().parse().map_err(|_| err())?;
    let end = parts[1].trim().parse().map_err(|_| err())?;
    let n = parts[2].trim().parse().map_err(|_| err())?;
    Ok((start, end, n))
}

impl CliArgs {
    /// The flags that were given, as a document.
    pub fn to_document(&self) -> Result<ConfigDocument, ConfigError> {
        let (start, end, n) = match &self.distance {
            Some(d) => {
                let (a, b, n) = parse_distance(d)?;
                (Some(a), Some(b), Some(n))
            }
            None => (None, None, None),
        };
        Ok(ConfigDocument {
            protocol: self.protocol,
            sigma: self.sigma,
            epsilon: self.epsilon,
            beta: self.beta,
            r: self.r,
            optimize_r: self.optimize_r.then_some(true),
            r_grid: self.r_grid.clone(),
            ua_copies: self.ua_copies,
            ua_model: self.ua_model,
            scissor_t: self.scissor_t,
            relay_position: self.relay_position,
            bob_phase_noise: self.no_bob_phase_noise.then_some(false),
            alice_measurement: self.alice_measurement,
            bob_measurement: self.bob_measurement,
            distance_start_km: start,
            distance_end_km: end,
            n_points: n,
            log_spacing: self.log_spacing.then_some(true),
            cutoff: self.cutoff,
            leakage_tolerance: self.leakage_tolerance,
            mc_samples: self.mc_samples,
            seed: self.seed,
            loss_db_per_km: self.loss_db_per_km,
            sifting: self.sifting.then_some(true),
            workers: self.workers,
            output: self.output.clone(),
            format: self.format,
        })
    }
}

/// Merges flags over an optional JSON config text and resolves defaults.
pub fn parse_config(args: &CliArgs, document: Option<&str>) -> Result<SweepConfig, ConfigError> {
    let mut base = match document {
        Some(text) => ConfigDocument::from_json(text)?,
        None => ConfigDocument::default(),
    };
    // A fixed r on the command line replaces a file's optimization and
    // the other way round.
    if args.r.is_some() {
        base.optimize_r = None;
        base.r_grid = None;
    }
    if args.optimize_r {
        base.r = None;
    }
    resolve(base.overlay(args.to_document()?))
}
