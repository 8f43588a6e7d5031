//! Point-to-point pipelines evaluated with covariance matrices.

use super::montecarlo::{self, Aggregate, Sample};
use super::spec::{Diagnostics, ProtocolResult, ProtocolSpec, UaModel, Variant};
use crate::error::{invalid, Result};
use crate::gaussian::{phase_noise_cm, thermal_loss_cm, tmsv_cm, ua_cm_closed_form, ua_cm_exact};
use crate::keyrate::{plob_bound, transmissivity_from_distance};

pub(crate) fn expect_variant(spec: &ProtocolSpec, variant: Variant) -> Result<()> {
    spec.validate()?;
    if spec.variant != variant {
        return Err(invalid(
            "variant",
            format!("`{}` spec passed to the `{}` pipeline", spec.variant, variant),
        ));
    }
    Ok(())
}

pub(crate) fn plob_or_infinite(eta: f64) -> Result<f64> {
    if eta < 1.0 {
        plob_bound(eta)
    } else {
        Ok(f64::INFINITY)
    }
}

/// Turns an aggregate into a result, computing the rate on the averaged CM.
pub(crate) fn finish(spec: &ProtocolSpec, distance_km: f64, eta: f64, agg: Aggregate) -> Result<ProtocolResult> {
    let (i_ab, chi_be, kappa) = montecarlo::rate(spec, &agg.cm, agg.p_success)?;
    let p_qs = if agg.p_ua > 0.0 { agg.p_success / agg.p_ua } else { 0.0 };
    Ok(ProtocolResult {
        variant: spec.variant,
        r: spec.r,
        distance_km,
        eta,
        averaged_cm: agg.cm,
        p_success: agg.p_success,
        p_ua: agg.p_ua,
        p_qs,
        i_ab,
        chi_be,
        kappa,
        kappa_clamped: kappa.max(0.0),
        plob: plob_or_infinite(eta)?,
        diagnostics: Diagnostics {
            leakage: agg.leakage,
            pruned_weight: agg.pruned_weight,
            mc_stderr: agg.stderr,
            samples: agg.samples,
            skipped_samples: agg.skipped,
        },
    })
}

/// TMSV over a thermal-loss link, no phase noise.
pub fn run_baseline(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    expect_variant(spec, Variant::Baseline)?;
    let eta = transmissivity_from_distance(distance_km, spec.loss_db_per_km)?;
    let cm = thermal_loss_cm(&tmsv_cm(spec.r)?, eta, spec.epsilon)?;
    let agg = montecarlo::run(spec, |_| Ok(Sample::certain(cm.clone())))?;
    finish(spec, distance_km, eta, agg)
}

/// Thermal-loss link with a random phase on the transmitted arm.
pub fn run_phase_noise(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    expect_variant(spec, Variant::PhaseNoise)?;
    let eta = transmissivity_from_distance(distance_km, spec.loss_db_per_km)?;
    let model = spec.phase_model();
    let agg = montecarlo::run(spec, |i| {
        let phi = model.sample(i, 1)[0];
        Ok(Sample::certain(phase_noise_cm(spec.r, eta, spec.epsilon, phi)?))
    })?;
    finish(spec, distance_km, eta, agg)
}

/// Phase-noised link protected by unitary averaging over `ua_copies` arms.
pub fn run_unitary_averaging(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    expect_variant(spec, Variant::UnitaryAveraging)?;
    let eta = transmissivity_from_distance(distance_km, spec.loss_db_per_km)?;
    let model = spec.phase_model();
    let agg = montecarlo::run(spec, |i| {
        let phases = model.sample(i, spec.ua_copies);
        let h = match spec.ua_model {
            UaModel::Exact => ua_cm_exact(spec.r, eta, spec.epsilon, &phases)?,
            UaModel::ClosedForm => ua_cm_closed_form(spec.r, eta, spec.epsilon, &phases)?,
        };
        Ok(Sample {
            cm: h.cm.into_entries(),
            probability: h.probability,
            ua_probability: h.probability,
            leakage: 0.0,
            pruned_weight: 0.0,
        })
    })?;
    finish(spec, distance_km, eta, agg)
}
