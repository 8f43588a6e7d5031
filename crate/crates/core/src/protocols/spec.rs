use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Result};
use crate::gaussian::{CovarianceMatrix, MeasurementKind, Quadrature};
use crate::keyrate::DEFAULT_LOSS_DB_PER_KM;

/// Protocol pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Variant {
    /// Direct transmission over a thermal-loss link.
    #[serde(rename = "baseline")]
    #[value(name = "baseline")]
    Baseline,
    /// Direct transmission with Gaussian phase noise.
    #[serde(rename = "phase")]
    #[value(name = "phase")]
    PhaseNoise,
    /// Phase noise suppressed by unitary averaging.
    #[serde(rename = "ua")]
    #[value(name = "ua")]
    UnitaryAveraging,
    /// Quantum-scissor relay at an intermediate node.
    #[serde(rename = "nla")]
    #[value(name = "nla")]
    NlaRelay,
    /// Quantum-scissor relay with unitary averaging on both links.
    #[serde(rename = "ua-nla")]
    #[value(name = "ua-nla")]
    HybridUaNla,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::PhaseNoise => "phase",
            Variant::UnitaryAveraging => "ua",
            Variant::NlaRelay => "nla",
            Variant::HybridUaNla => "ua-nla",
        }
    }

    pub fn is_relay(self) -> bool {
        matches!(self, Variant::NlaRelay | Variant::HybridUaNla)
    }

    pub fn uses_averaging(self) -> bool {
        matches!(self, Variant::UnitaryAveraging | Variant::HybridUaNla)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scissor beamsplitter transmissivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScissorTransmissivity {
    /// Gain chosen so the amplification offsets the first link's loss.
    Auto,
    Fixed(f64),
}

/// Clamp range for the automatic scissor transmissivity.
pub const AUTO_T_RANGE: (f64, f64) = (0.02, 0.98);

impl ScissorTransmissivity {
    /// Resolves to a number given Alice's link transmissivity: `g² = 1/η_A`,
    /// `T = 1/(1+g²)`, clamped to [`AUTO_T_RANGE`].
    pub fn resolve(self, eta_alice: f64) -> f64 {
        match self {
            ScissorTransmissivity::Fixed(t) => t,
            ScissorTransmissivity::Auto => (eta_alice / (1.0 + eta_alice)).clamp(AUTO_T_RANGE.0, AUTO_T_RANGE.1),
        }
    }
}

impl fmt::Display for ScissorTransmissivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScissorTransmissivity::Auto => f.write_str("auto"),
            ScissorTransmissivity::Fixed(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for ScissorTransmissivity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ScissorTransmissivity::Auto);
        }
        let t: f64 = s.parse().map_err(|_| format!("`{s}` is neither `auto` nor a number"))?;
        if !(t > 0.0 && t < 1.0) {
            return Err(format!("{t} is outside (0, 1)"));
        }
        Ok(ScissorTransmissivity::Fixed(t))
    }
}

impl Serialize for ScissorTransmissivity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ScissorTransmissivity::Auto => s.serialize_str("auto"),
            ScissorTransmissivity::Fixed(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for ScissorTransmissivity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Num(t) => t.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// How the averaged arm's state is computed in the Gaussian pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum UaModel {
    /// Full Gaussian propagation with vacuum conditioning of the error arms.
    Exact,
    /// Cos-only closed form with the exact herald probability attached.
    ClosedForm,
}

impl fmt::Display for UaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UaModel::Exact => "exact",
            UaModel::ClosedForm => "closed-form",
        })
    }
}

/// I.i.d. zero-mean normal phases, one stream per Monte-Carlo sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl PhaseNoiseModel {
    /// Phases for `n_shifters` shifters of sample `sample_index`. The same
    /// `(seed, sample_index)` always gives the same sequence, and shifter
    /// `k` is the `k`-th draw of that sequence.
    pub fn sample(&self, sample_index: u64, n_shifters: usize) -> Vec<f64> {
        if self.sigma == 0.0 {
            return vec![0.0; n_shifters];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample_index);
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        (0..n_shifters).map(|_| normal.sample(&mut rng)).collect()
    }
}

/// Everything that defines one protocol evaluation apart from distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    pub variant: Variant,
    /// Two-mode squeezing of Alice's source.
    pub r: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    /// Excess noise per link, in shot-noise units at the channel input.
    pub epsilon: f64,
    /// Phase-noise standard deviation in radians.
    pub sigma: f64,
    /// Copies used by unitary averaging; 1 means off.
    pub ua_copies: usize,
    pub scissor_t: ScissorTransmissivity,
    /// Fraction of the distance between Alice and the relay node.
    pub relay_position: f64,
    pub alice_kind: MeasurementKind,
    pub bob_kind: MeasurementKind,
    pub mc_samples: usize,
    pub seed: u64,
    /// Fock cutoff for relay pipelines.
    pub cutoff: usize,
    pub loss_db_per_km: f64,
    pub ua_model: UaModel,
    /// Apply phase noise on Bob's arm of the relay as well as Alice's.
    pub bob_phase_noise: bool,
    /// Multiply the key rate by ½ for basis sifting.
    pub sifting: bool,
    /// Largest TMSV weight allowed above the Fock cutoff.
    pub leakage_tolerance: f64,
}

pub const DEFAULT_BETA: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 0.02;
pub const DEFAULT_MC_SAMPLES: usize = 400;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_R: f64 = 0.5;
pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-4;

impl ProtocolSpec {
    /// Defaults for a variant.
    pub fn new(variant: Variant) -> Self {
        let (alice_kind, bob_kind) = default_measurements(variant);
        Self {
            variant,
            r: DEFAULT_R,
            beta: DEFAULT_BETA,
            epsilon: DEFAULT_EPSILON,
            sigma: 0.0,
            ua_copies: if variant.uses_averaging() { 2 } else { 1 },
            scissor_t: ScissorTransmissivity::Auto,
            relay_position: 0.5,
            alice_kind,
            bob_kind,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: DEFAULT_SEED,
            cutoff: default_cutoff(variant),
            loss_db_per_km: DEFAULT_LOSS_DB_PER_KM,
            ua_model: UaModel::Exact,
            bob_phase_noise: true,
            sifting: false,
            leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE,
        }
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..self.clone() }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..self.clone() }
    }

    pub fn phase_model(&self) -> PhaseNoiseModel {
        PhaseNoiseModel {
            sigma: self.sigma,
            seed: self.seed,
        }
    }

    pub fn sifting_factor(&self) -> f64 {
        if self.sifting {
            0.5
        } else {
            1.0
        }
    }

    /// Samples actually drawn: one when nothing is random.
    pub fn effective_samples(&self) -> usize {
        if self.sigma == 0.0 {
            1
        } else {
            self.mc_samples
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("r", self.r, 0.0, f64::MAX)?;
        check_range("beta", self.beta, 0.0, 1.0)?;
        check_range("epsilon", self.epsilon, 0.0, f64::MAX)?;
        check_range("sigma", self.sigma, 0.0, f64::MAX)?;
        check_range("loss_db_per_km", self.loss_db_per_km, 0.0, f64::MAX)?;
        check_range("leakage_tolerance", self.leakage_tolerance, 0.0, 1.0)?;
        if !(self.relay_position > 0.0 && self.relay_position < 1.0) {
            return Err(invalid("relay_position", format!("{} is outside (0, 1)", self.relay_position)));
        }
        if self.mc_samples == 0 {
            return Err(invalid("mc_samples", "must be positive"));
        }
        if self.cutoff < 1 {
            return Err(invalid("cutoff", "must be at least 1"));
        }
        if let ScissorTransmissivity::Fixed(t) = self.scissor_t {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid("scissor_t", format!("{t} is outside (0, 1)")));
            }
        }
        if self.variant.uses_averaging() {
            if !matches!(self.ua_copies, 2 | 4) {
                return Err(invalid("ua_copies", format!("{} is not 2 or 4", self.ua_copies)));
            }
        } else if self.ua_copies != 1 {
            return Err(invalid("ua_copies", format!("averaging is not part of the `{}` protocol", self.variant)));
        }
        if self.variant == Variant::Baseline && self.sigma != 0.0 {
            return Err(invalid("sigma", "the baseline protocol has no phase noise; use `phase`"));
        }
        Ok(())
    }
}

/// Heterodyne at Alice; homodyne at Bob for direct links and heterodyne for
/// relay links.
pub fn default_measurements(variant: Variant) -> (MeasurementKind, MeasurementKind) {
    let bob = if variant.is_relay() {
        MeasurementKind::Heterodyne
    } else {
        MeasurementKind::Homodyne(Quadrature::X)
    };
    (MeasurementKind::Heterodyne, bob)
}

pub fn default_cutoff(variant: Variant) -> usize {
    if variant == Variant::HybridUaNla {
        6
    } else {
        8
    }
}

/// Monte-Carlo and truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Probability-weighted Fock-cutoff leakage.
    pub leakage: f64,
    /// Probability-weighted trace removed by branch pruning.
    pub pruned_weight: f64,
    /// Batch-means standard error of the key rate; 0 without sampling.
    pub mc_stderr: f64,
    pub samples: usize,
    /// Samples dropped because their herald was degenerate or their state
    /// unphysical. They count as failed heralds in the success probability.
    pub skipped_samples: usize,
}

/// Key-rate result at one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub variant: Variant,
    pub r: f64,
    pub distance_km: f64,
    /// End-to-end fiber transmissivity.
    pub eta: f64,
    pub averaged_cm: CovarianceMatrix,
    /// Overall herald probability.
    pub p_success: f64,
    /// Mean averaging-herald probability (1 without averaging).
    pub p_ua: f64,
    /// Scissor success given the averaging heralds, so that
    /// `p_ua · p_qs = p_success` (1 without a relay).
    pub p_qs: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    /// Raw key rate, `sifting · p_success · (β·i_ab − chi_be)`.
    pub kappa: f64,
    pub kappa_clamped: f64,
    pub plob: f64,
    pub diagnostics: Diagnostics,
}
