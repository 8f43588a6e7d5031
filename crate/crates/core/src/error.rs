use thiserror::Error;

/// Numerical and domain errors shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance matrix is not physical: {0}")]
    Unphysical(String),

    #[error("degenerate unitary-averaging herald: |Z| = {0:e}")]
    DegenerateHerald(f64),

    #[error("herald is impossible: probability {0:e}")]
    HeraldImpossible(f64),

    #[error(
        "branch count {count} exceeds cap {cap} and pruning would drop weight {pruned:e}; \
         use a coarser Kraus truncation or merge branches"
    )]
    BranchOverflow { count: usize, cap: usize, pruned: f64 },

    #[error("Fock cutoff leakage {leakage:e} exceeds threshold {threshold:e}; raise the cutoff or lower r")]
    CutoffLeakage { leakage: f64, threshold: f64 },

    #[error("state has non-zero first moments (max |<q>| = {0:e})")]
    NonZeroMean(f64),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("no crossing in range [{start} km, {end} km]")]
    NoCrossing { start: f64, end: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects non-finite values and values outside `[lo, hi]`.
pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid(name, format!("{value} is not finite")));
    }
    if value < lo || value > hi {
        return Err(invalid(name, format!("{value} is outside [{lo}, {hi}]")));
    }
    Ok(value)
}
