//! End-to-end protocol pipelines: state preparation, transmission, heralds
//! and the resulting key rate.

mod direct;
mod low_noise;
mod montecarlo;
mod optimize;
mod relay;
mod spec;

pub use direct::{run_baseline, run_phase_noise, run_unitary_averaging};
pub use low_noise::{phase_statistics, ua_low_noise_approx, PhaseStatistics};
pub use montecarlo::STDERR_BATCHES;
pub use optimize::{default_r_grid, optimize_modulation, DEFAULT_R_GRID_POINTS, DEFAULT_R_RANGE};
pub use relay::{fock_link_state, run_hybrid_ua_nla, run_nla_relay, scissor_herald};
pub use spec::*;

use crate::error::Result;

/// Runs the pipeline selected by `spec.variant`.
pub fn run_protocol(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    match spec.variant {
        Variant::Baseline => run_baseline(spec, distance_km),
        Variant::PhaseNoise => run_phase_noise(spec, distance_km),
        Variant::UnitaryAveraging => run_unitary_averaging(spec, distance_km),
        Variant::NlaRelay => run_nla_relay(spec, distance_km),
        Variant::HybridUaNla => run_hybrid_ua_nla(spec, distance_km),
    }
}
