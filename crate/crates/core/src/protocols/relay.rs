//! Fock-space pipelines: the quantum-scissor relay with and without unitary
//! averaging, and the scissorless reference used to cross-check the Gaussian
//! backend.
//!
//! Mode layout of the relay. Alice holds `a1` and sends `a2` to the relay;
//! Bob holds `b2` and sends `b1`. The relay mixes `a2` and `b1` on a
//! balanced splitter and keeps the click pattern "nothing on the `a2` port,
//! one photon on the `b1` port". The mirror pattern has the same probability
//! and differs by a π phase on `b2`, which is corrected, hence the factor 2.

use std::f64::consts::PI;

use super::direct::{expect_variant, finish};
use super::montecarlo::{self, Sample};
use super::spec::{ProtocolResult, ProtocolSpec, Variant};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    make_kraus_channel, single_photon_entangler, tmsv_ket, tmsv_truncation_error, BranchMixture, ChannelOptions,
    DensityMatrix, FockKet, KrausChannel,
};
use crate::gaussian::{CovarianceMatrix, HeraldedCm};
use crate::keyrate::transmissivity_from_distance;
use crate::optics::{adjoint2, averaging_pairs, beamsplitter, BeamsplitterConvention};

/// Encode, per-arm phase, decode on the listed modes of a ket. With one arm
/// this is a plain phase shift. Returns the state and the cutoff leakage.
fn apply_averaging(ket: FockKet, arms: &[usize], phases: &[f64]) -> Result<(FockKet, f64)> {
    if arms.len() != phases.len() {
        return Err(invalid("phases", "one phase per arm"));
    }
    if arms.len() == 1 {
        return Ok((ket.apply_phase_shift(arms[0], phases[0])?, 0.0));
    }
    let pairs = averaging_pairs(arms.len())?;
    let bs = beamsplitter(0.5, BeamsplitterConvention::Exponential)?;
    let inverse = adjoint2(&bs);
    let mut ket = ket;
    let mut leakage = 0.0;
    for &(i, j) in &pairs {
        let t = ket.apply_two_mode_passive(arms[i], arms[j], &bs)?;
        leakage += t.leakage;
        ket = t.state;
    }
    for (&m, &phi) in arms.iter().zip(phases) {
        ket = ket.apply_phase_shift(m, phi)?;
    }
    for &(i, j) in pairs.iter().rev() {
        let t = ket.apply_two_mode_passive(arms[i], arms[j], &inverse)?;
        leakage += t.leakage;
        ket = t.state;
    }
    Ok((ket, leakage))
}

/// Heralded state of one side of the relay.
#[derive(Debug, Clone)]
struct Side {
    /// Two-mode state, kept mode first and transmitted mode second for
    /// Alice, transmitted first for Bob. Unnormalized: its trace is the
    /// averaging herald probability times the weight kept by truncation.
    rho: DensityMatrix,
    herald: f64,
    leakage: f64,
    pruned_weight: f64,
}

/// Sends `ket`'s arms through the channel: error arms (the modes after the
/// first two) are heralded on vacuum, `transmitted` keeps levels up to
/// `keep` (or the full cutoff when `None`).
fn transmit(
    ket: FockKet,
    transmitted: usize,
    channel: &KrausChannel,
    keep: Option<usize>,
    options: &ChannelOptions,
) -> Result<(BranchMixture, f64)> {
    let norm = ket.norm_sqr();
    let n = ket.n_modes();
    let mut mix = BranchMixture::pure(ket);
    for m in (2..n).rev() {
        mix = mix.herald_vacuum_after_channel(channel, m)?;
    }
    let herald = mix.trace() / norm;
    mix = match keep {
        Some(c) => mix.apply_channel_restricted(channel, transmitted, c, options)?,
        None => mix.apply_channel(channel, transmitted, options)?,
    };
    Ok((mix, herald))
}

/// Alice's TMSV with `phases.len() − 1` vacuum error arms, averaged and sent
/// through the channel. The output is normalized to the untruncated TMSV.
fn alice_side(
    r: f64,
    cutoff: usize,
    phases: &[f64],
    channel: &KrausChannel,
    keep: Option<usize>,
    options: &ChannelOptions,
) -> Result<Side> {
    let mut ket = tmsv_ket(r, cutoff)?;
    let norm = ket.norm_sqr();
    for _ in 1..phases.len() {
        ket = ket.tensor(&FockKet::vacuum(1, cutoff)?);
    }
    let arms: Vec<usize> = (1..=phases.len()).collect();
    let (ket, passive_leak) = apply_averaging(ket, &arms, phases)?;
    let (mix, herald) = transmit(ket, 1, channel, keep, options)?;
    let rho = mix.partial_trace(&[0, 1])?.scaled(1.0 / norm);
    Ok(Side {
        rho,
        herald,
        leakage: (passive_leak + mix.leakage) / norm,
        pruned_weight: mix.pruned_weight / norm,
    })
}

/// Bob's single photon split by the scissor splitter into `b1` (sent) and
/// `b2` (kept), with `b1` averaged against `phases.len() − 1` error arms.
fn bob_side(transmissivity: f64, phases: &[f64], channel: &KrausChannel, options: &ChannelOptions) -> Result<Side> {
    let mut ket = single_photon_entangler(transmissivity)?;
    for _ in 1..phases.len() {
        ket = ket.tensor(&FockKet::vacuum(1, 1)?);
    }
    let arms: Vec<usize> = std::iter::once(0).chain(2..phases.len() + 1).collect();
    let (ket, passive_leak) = apply_averaging(ket, &arms, phases)?;
    let (mix, herald) = transmit(ket, 0, channel, Some(1), options)?;
    Ok(Side {
        rho: mix.partial_trace(&[0, 1])?,
        herald,
        leakage: passive_leak + mix.leakage,
        pruned_weight: mix.pruned_weight,
    })
}

/// Interferes Alice's transmitted mode (second mode of `alice`) with Bob's
/// (first mode of `bob`) on a balanced splitter and keeps one click pattern.
/// Returns the unnormalized state on (Alice's kept mode, Bob's kept mode)
/// with the π correction applied, and the success probability summed over
/// both patterns, `2·Tr`.
pub fn scissor_herald(alice: &DensityMatrix, bob: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    if alice.n_modes() != 2 || bob.n_modes() != 2 || alice.dims()[1] != 2 || bob.dims()[0] != 2 {
        return Err(invalid(
            "scissor input",
            "expected two-mode states with a single-photon-truncated transmitted mode",
        ));
    }
    let joint = alice.tensor(bob).with_mode_cutoff(1, 2)?.with_mode_cutoff(2, 2)?;
    let mixed = joint.apply_beamsplitter(1, 2, 0.5, BeamsplitterConvention::Exponential)?.state;
    let kept = mixed
        .project_unnormalized(1, 0)?
        .project_unnormalized(1, 1)?
        .apply_phase_shift(1, PI)?;
    let p = 2.0 * kept.trace();
    Ok((kept, p))
}

struct RelayLinks {
    alice: KrausChannel,
    bob: KrausChannel,
    transmissivity: f64,
    eta: f64,
}

fn relay_links(spec: &ProtocolSpec, distance_km: f64) -> Result<RelayLinks> {
    let d_alice = distance_km * spec.relay_position;
    let eta_alice = transmissivity_from_distance(d_alice, spec.loss_db_per_km)?;
    let eta_bob = transmissivity_from_distance(distance_km - d_alice, spec.loss_db_per_km)?;
    Ok(RelayLinks {
        alice: make_kraus_channel(eta_alice, spec.epsilon, spec.cutoff)?,
        bob: make_kraus_channel(eta_bob, spec.epsilon, 1)?,
        transmissivity: spec.scissor_t.resolve(eta_alice),
        eta: transmissivity_from_distance(distance_km, spec.loss_db_per_km)?,
    })
}

fn check_truncation(spec: &ProtocolSpec) -> Result<()> {
    let leakage = tmsv_truncation_error(spec.r, spec.cutoff);
    if leakage > spec.leakage_tolerance {
        return Err(Error::CutoffLeakage {
            leakage,
            threshold: spec.leakage_tolerance,
        });
    }
    Ok(())
}

fn relay_sample(spec: &ProtocolSpec, links: &RelayLinks, alice_phases: &[f64], bob_phases: &[f64]) -> Result<Sample> {
    let options = ChannelOptions::default();
    let a = alice_side(spec.r, spec.cutoff, alice_phases, &links.alice, Some(1), &options)?;
    let b = bob_side(links.transmissivity, bob_phases, &links.bob, &options)?;
    let (kept, probability) = scissor_herald(&a.rho, &b.rho)?;
    if !(probability >= crate::gaussian::MIN_HERALD_PROBABILITY) {
        return Err(Error::HeraldImpossible(probability));
    }
    Ok(Sample {
        cm: kept.extract_cm()?.into_entries(),
        probability,
        ua_probability: a.herald * b.herald,
        leakage: a.leakage + b.leakage,
        pruned_weight: a.pruned_weight + b.pruned_weight,
    })
}

fn run_relay(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    check_truncation(spec)?;
    let links = relay_links(spec, distance_km)?;
    let model = spec.phase_model();
    let n = spec.ua_copies;
    let agg = montecarlo::run(spec, |i| {
        let draws = model.sample(i, 2 * n);
        let (alice_phases, bob_draws) = draws.split_at(n);
        let bob_phases = if spec.bob_phase_noise {
            bob_draws.to_vec()
        } else {
            vec![0.0; n]
        };
        relay_sample(spec, &links, alice_phases, &bob_phases)
    })?;
    finish(spec, distance_km, links.eta, agg)
}

/// Scissor relay between Alice and Bob, phase noise on the transmitted arms.
pub fn run_nla_relay(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    expect_variant(spec, Variant::NlaRelay)?;
    run_relay(spec, distance_km)
}

/// Scissor relay with unitary averaging protecting both transmitted arms.
pub fn run_hybrid_ua_nla(spec: &ProtocolSpec, distance_km: f64) -> Result<ProtocolResult> {
    expect_variant(spec, Variant::HybridUaNla)?;
    run_relay(spec, distance_km)
}

/// Fock-backend state of a point-to-point link: TMSV, phases on the
/// transmitted arm (averaged when more than one), thermal channel, vacuum
/// heralds on error arms. Returns the heralded CM and the cutoff leakage.
///
/// The Fock TMSV carries the opposite correlation sign to
/// [`crate::gaussian::tmsv_cm`]; the returned CM is rotated by π on the
/// transmitted mode so the two backends compare entry by entry.
pub fn fock_link_state(r: f64, eta: f64, epsilon: f64, phases: &[f64], cutoff: usize) -> Result<(HeraldedCm, f64)> {
    if phases.is_empty() {
        return Err(invalid("phases", "at least one phase is needed"));
    }
    let channel = make_kraus_channel(eta, epsilon, cutoff)?;
    let side = alice_side(r, cutoff, phases, &channel, None, &ChannelOptions::default())?;
    let cm: CovarianceMatrix = side.rho.extract_cm()?.rotate_mode(1, PI)?;
    Ok((
        HeraldedCm {
            cm,
            probability: side.herald,
        },
        side.leakage + tmsv_truncation_error(r, cutoff),
    ))
}
