use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gaussian::{MeasurementKind, Quadrature};
use crate::protocols::{default_measurements, default_r_grid, ProtocolSpec, ScissorTransmissivity, UaModel, Variant};

/// Environment variable that sets the default worker count.
pub const WORKERS_ENV: &str = "CVQKD_WORKERS";

pub const DEFAULT_DISTANCE_START_KM: f64 = 0.0;
pub const DEFAULT_DISTANCE_END_KM: f64 = 300.0;
pub const DEFAULT_N_POINTS: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Measurement names accepted on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Measurement {
    Heterodyne,
    HomodyneX,
    HomodyneP,
}

impl From<Measurement> for MeasurementKind {
    fn from(m: Measurement) -> Self {
        match m {
            Measurement::Heterodyne => MeasurementKind::Heterodyne,
            Measurement::HomodyneX => MeasurementKind::Homodyne(Quadrature::X),
            Measurement::HomodyneP => MeasurementKind::Homodyne(Quadrature::P),
        }
    }
}

impl From<MeasurementKind> for Measurement {
    fn from(m: MeasurementKind) -> Self {
        match m {
            MeasurementKind::Heterodyne => Measurement::Heterodyne,
            MeasurementKind::Homodyne(Quadrature::X) => Measurement::HomodyneX,
            MeasurementKind::Homodyne(Quadrature::P) => Measurement::HomodyneP,
        }
    }
}

/// Sweep settings as written in a JSON config file. Every key is optional;
/// the same keys head CSV output, so a header can be fed back as a config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Variant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize_r: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ua_copies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ua_model: Option<UaModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scissor_t: Option<ScissorTransmissivity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_position: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bob_phase_noise: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alice_measurement: Option<Measurement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bob_measurement: Option<Measurement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_start_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_end_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_spacing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leakage_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_db_per_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sifting: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
        let map = value
            .as_object()
            .ok_or_else(|| ConfigError::new("config", "expected a JSON object"))?;
        // One key at a time, so the error names the key at fault.
        for (k, v) in map {
            let single = serde_json::Value::Object([(k.clone(), v.clone())].into_iter().collect());
            serde_json::from_value::<ConfigDocument>(single).map_err(|e| ConfigError::new(k.clone(), e.to_string()))?;
        }
        serde_json::from_value(value).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    /// Keys of the later document override this one.
    pub fn overlay(self, top: ConfigDocument) -> ConfigDocument {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigDocument { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(
            protocol, sigma, epsilon, beta, r, optimize_r, r_grid, ua_copies, ua_model, scissor_t, relay_position,
            bob_phase_noise, alice_measurement, bob_measurement, distance_start_km, distance_end_km, n_points,
            log_spacing, cutoff, leakage_tolerance, mc_samples, seed, loss_db_per_km, sifting, workers, output, format
        )
    }
}

/// Configuration error naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, reason } => ConfigError::new(name, reason),
            other => ConfigError::new("config", other.to_string()),
        }
    }
}

/// Fully resolved sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub spec: ProtocolSpec,
    pub distance_start_km: f64,
    pub distance_end_km: f64,
    pub n_points: usize,
    pub log_spacing: bool,
    /// `None` evaluates at `spec.r`; otherwise the best point of the grid.
    pub r_grid: Option<Vec<f64>>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub workers: usize,
}

fn default_workers() -> Result<usize, ConfigError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ConfigError::new(WORKERS_ENV, format!("`{v}` is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Resolves a merged document against the documented defaults and checks
/// every range and every variant/parameter combination.
pub fn resolve(doc: ConfigDocument) -> Result<SweepConfig, ConfigError> {
    let variant = doc
        .protocol
        .ok_or_else(|| ConfigError::new("protocol", "no protocol given"))?;
    let relay = variant.is_relay();
    let reject = |present: bool, key: &str, why: &str| {
        if present {
            Err(ConfigError::new(key, format!("{why}, not `{variant}`")))
        } else {
            Ok(())
        }
    };
    reject(!relay && doc.scissor_t.is_some(), "scissor_t", "applies to relay protocols")?;
    reject(!relay && doc.relay_position.is_some(), "relay_position", "applies to relay protocols")?;
    reject(!relay && doc.bob_phase_noise.is_some(), "bob_phase_noise", "applies to relay protocols")?;
    reject(!relay && doc.cutoff.is_some(), "cutoff", "applies to the Fock-space relay protocols")?;
    reject(!relay && doc.leakage_tolerance.is_some(), "leakage_tolerance", "applies to the Fock-space relay protocols")?;
    reject(
        variant != Variant::UnitaryAveraging && doc.ua_model.is_some(),
        "ua_model",
        "applies to the `ua` protocol",
    )?;
    reject(
        variant == Variant::Baseline && doc.sigma.is_some_and(|s| s != 0.0),
        "sigma",
        "phase noise needs a noisy protocol",
    )?;
    if doc.optimize_r == Some(true) && doc.r.is_some() {
        return Err(ConfigError::new("r", "a fixed r conflicts with optimize_r"));
    }
    if doc.r_grid.is_some() && doc.optimize_r != Some(true) {
        return Err(ConfigError::new("r_grid", "only used together with optimize_r"));
    }

    let mut spec = ProtocolSpec::new(variant);
    let (alice, bob) = default_measurements(variant);
    spec.r = doc.r.unwrap_or(spec.r);
    spec.beta = doc.beta.unwrap_or(spec.beta);
    spec.epsilon = doc.epsilon.unwrap_or(spec.epsilon);
    spec.sigma = doc.sigma.unwrap_or(spec.sigma);
    spec.ua_copies = doc.ua_copies.unwrap_or(spec.ua_copies);
    spec.ua_model = doc.ua_model.unwrap_or(spec.ua_model);
    spec.scissor_t = doc.scissor_t.unwrap_or(spec.scissor_t);
    spec.relay_position = doc.relay_position.unwrap_or(spec.relay_position);
    spec.bob_phase_noise = doc.bob_phase_noise.unwrap_or(spec.bob_phase_noise);
    spec.alice_kind = doc.alice_measurement.map_or(alice, Into::into);
    spec.bob_kind = doc.bob_measurement.map_or(bob, Into::into);
    spec.cutoff = doc.cutoff.unwrap_or(spec.cutoff);
    spec.leakage_tolerance = doc.leakage_tolerance.unwrap_or(spec.leakage_tolerance);
    spec.mc_samples = doc.mc_samples.unwrap_or(spec.mc_samples);
    spec.seed = doc.seed.unwrap_or(spec.seed);
    spec.loss_db_per_km = doc.loss_db_per_km.unwrap_or(spec.loss_db_per_km);
    spec.sifting = doc.sifting.unwrap_or(spec.sifting);
    spec.validate()?;

    let r_grid = if doc.optimize_r == Some(true) {
        let grid = doc.r_grid.unwrap_or_else(default_r_grid);
        if grid.is_empty() || grid.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(ConfigError::new("r_grid", "needs non-negative finite values"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ConfigError::new("r_grid", "must be strictly ascending"));
        }
        Some(grid)
    } else {
        None
    };

    let start = doc.distance_start_km.unwrap_or(DEFAULT_DISTANCE_START_KM);
    let end = doc.distance_end_km.unwrap_or(DEFAULT_DISTANCE_END_KM);
    let n_points = doc.n_points.unwrap_or(DEFAULT_N_POINTS);
    let log_spacing = doc.log_spacing.unwrap_or(false);
    if !start.is_finite() || start < 0.0 {
        return Err(ConfigError::new("distance_start_km", format!("{start} is not a non-negative distance")));
    }
    if !end.is_finite() || !(start < end) {
        return Err(ConfigError::new("distance_end_km", format!("{end} does not exceed the start {start}")));
    }
    if n_points < 2 {
        return Err(ConfigError::new("n_points", "at least two points"));
    }
    if log_spacing && start == 0.0 {
        return Err(ConfigError::new("log_spacing", "needs a positive start distance"));
    }
    let workers = match doc.workers {
        Some(0) => return Err(ConfigError::new("workers", "must be positive")),
        Some(n) => n,
        None => default_workers()?,
    };
    Ok(SweepConfig {
        spec,
        distance_start_km: start,
        distance_end_km: end,
        n_points,
        log_spacing,
        r_grid,
        output_path: doc.output,
        output_format: doc.format.unwrap_or(OutputFormat::Csv),
        workers,
    })
}

impl SweepConfig {
    /// Distance grid, endpoints included.
    pub fn distances(&self) -> Vec<f64> {
        let (a, b, n) = (self.distance_start_km, self.distance_end_km, self.n_points);
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    return b;
                }
                let f = i as f64 / (n - 1) as f64;
                if self.log_spacing {
                    a * (b / a).powf(f)
                } else {
                    a + (b - a) * f
                }
            })
            .collect()
    }

    /// Every setting that affects the numbers, with defaults filled in.
    /// Worker count and output location are left out so that files from
    /// runs that differ only in those are identical.
    pub fn to_document(&self) -> ConfigDocument {
        let s = &self.spec;
        let relay = s.variant.is_relay();
        let noisy = s.variant != Variant::Baseline;
        ConfigDocument {
            protocol: Some(s.variant),
            sigma: noisy.then_some(s.sigma),
            epsilon: Some(s.epsilon),
            beta: Some(s.beta),
            r: self.r_grid.is_none().then_some(s.r),
            optimize_r: Some(self.r_grid.is_some()),
            r_grid: self.r_grid.clone(),
            ua_copies: Some(s.ua_copies),
            ua_model: (s.variant == Variant::UnitaryAveraging).then_some(s.ua_model),
            scissor_t: relay.then_some(s.scissor_t),
            relay_position: relay.then_some(s.relay_position),
            bob_phase_noise: relay.then_some(s.bob_phase_noise),
            alice_measurement: Some(s.alice_kind.into()),
            bob_measurement: Some(s.bob_kind.into()),
            distance_start_km: Some(self.distance_start_km),
            distance_end_km: Some(self.distance_end_km),
            n_points: Some(self.n_points),
            log_spacing: Some(self.log_spacing),
            cutoff: relay.then_some(s.cutoff),
            leakage_tolerance: relay.then_some(s.leakage_tolerance),
            mc_samples: Some(s.mc_samples),
            seed: Some(s.seed),
            loss_db_per_km: Some(s.loss_db_per_km),
            sifting: Some(s.sifting),
            workers: None,
            output: None,
            format: Some(self.output_format),
        }
    }
}
