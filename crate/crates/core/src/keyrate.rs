//! Entropies, mutual information, Holevo bound and key rates, all in bits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Error, Result};
use crate::gaussian::{conditional_cm, symplectic_eigenvalues, CovarianceMatrix, MeasurementKind, Quadrature};

/// Standard telecom fiber attenuation.
pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;

/// `G(x) = (x+1)·log₂(x+1) − x·log₂ x`, the entropy of a thermal state with
/// mean photon number `x`.
pub fn entropy_g(x: f64) -> Result<f64> {
    if x.is_nan() || x < -1e-12 {
        return Err(invalid("x", format!("{x} is negative")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Von Neumann entropy from the symplectic spectrum.
pub fn von_neumann_entropy(cm: &CovarianceMatrix) -> f64 {
    symplectic_eigenvalues(cm)
        .into_iter()
        .map(|nu| entropy_g((nu - 1.0) / 2.0).expect("spectrum is clamped to >= 1"))
        .sum()
}

/// Covariance of the classical outcome of measuring one mode.
fn outcome_covariance(cm: &CovarianceMatrix, mode: usize, kind: MeasurementKind) -> DMatrix<f64> {
    let b = cm.block(mode, mode);
    match kind {
        MeasurementKind::Heterodyne => DMatrix::from_fn(2, 2, |i, j| b[(i, j)] + if i == j { 1.0 } else { 0.0 }),
        MeasurementKind::Homodyne(q) => {
            let k = if q == Quadrature::X { 0 } else { 1 };
            DMatrix::from_element(1, 1, b[(k, k)])
        }
    }
}

/// Shannon mutual information between Alice's and Bob's measurement outcomes
/// on a two-mode state, `½·log₂(det Y_B / det Y_B|A)`, where `Y` is Bob's
/// outcome covariance and `Y_B|A` its value once Alice's outcome is known.
pub fn mutual_information(cm: &CovarianceMatrix, kind_a: MeasurementKind, kind_b: MeasurementKind) -> Result<f64> {
    if cm.n_modes() != 2 {
        return Err(invalid("cm", "expected a two-mode state"));
    }
    let bob_given_alice = conditional_cm(cm, 0, kind_a)?;
    let y = outcome_covariance(cm, 1, kind_b).determinant();
    let y_cond = outcome_covariance(&bob_given_alice, 0, kind_b).determinant();
    if !(y_cond > 0.0) {
        return Err(Error::Singular("mutual information"));
    }
    Ok((0.5 * (y / y_cond).log2()).max(0.0))
}

/// Holevo information between Bob's outcome and Eve under reverse
/// reconciliation: `S(AB) − S(A | Bob's outcome)`, clamped at zero.
pub fn holevo_bound(cm: &CovarianceMatrix, bob_kind: MeasurementKind) -> Result<f64> {
    if cm.n_modes() != 2 {
        return Err(invalid("cm", "expected a two-mode state"));
    }
    let alice_given_bob = conditional_cm(cm, 1, bob_kind)?;
    let chi = von_neumann_entropy(cm) - von_neumann_entropy(&alice_given_bob);
    if chi < -1e-9 {
        return Err(Error::Unphysical(format!("negative Holevo information {chi:e}")));
    }
    Ok(chi.max(0.0))
}

/// Key rate with its zero-clamped companion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecretKeyRate {
    pub raw: f64,
    pub clamped: f64,
}

/// `κ = p·(β·I − χ)`.
pub fn secret_key_rate(i_ab: f64, chi_be: f64, beta: f64, p_success: f64) -> Result<SecretKeyRate> {
    check_range("i_ab", i_ab, 0.0, f64::MAX)?;
    check_range("chi_be", chi_be, 0.0, f64::MAX)?;
    check_range("beta", beta, 0.0, 1.0)?;
    check_range("p_success", p_success, 0.0, 1.0)?;
    let raw = p_success * (beta * i_ab - chi_be);
    Ok(SecretKeyRate {
        raw,
        clamped: raw.max(0.0),
    })
}

/// Repeaterless capacity of a pure-loss channel, `−log₂(1 − η)`.
pub fn plob_bound(eta: f64) -> Result<f64> {
    if !eta.is_finite() || eta <= 0.0 || eta >= 1.0 {
        return Err(invalid("eta", format!("{eta} is outside (0, 1)")));
    }
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}

/// Fiber transmissivity `10^(−L·d/10)`.
pub fn transmissivity_from_distance(distance_km: f64, loss_db_per_km: f64) -> Result<f64> {
    check_range("distance_km", distance_km, 0.0, f64::MAX)?;
    check_range("loss_db_per_km", loss_db_per_km, 0.0, f64::MAX)?;
    Ok(10f64.powf(-loss_db_per_km * distance_km / 10.0))
}

/// One point of a key-rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    pub eta: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub p_success: f64,
    pub kappa: f64,
    pub plob: f64,
}

impl KeyRatePoint {
    /// Evaluates the key rate of a two-mode state at a given distance.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        distance_km: f64,
        loss_db_per_km: f64,
        cm: &CovarianceMatrix,
        alice: MeasurementKind,
        bob: MeasurementKind,
        beta: f64,
        p_success: f64,
    ) -> Result<Self> {
        let eta = transmissivity_from_distance(distance_km, loss_db_per_km)?;
        let i_ab = mutual_information(cm, alice, bob)?;
        let chi_be = holevo_bound(cm, bob)?;
        let kappa = secret_key_rate(i_ab, chi_be, beta, p_success)?.raw;
        let plob = if eta < 1.0 { plob_bound(eta)? } else { f64::INFINITY };
        Ok(Self {
            distance_km,
            eta,
            i_ab,
            chi_be,
            p_success,
            kappa,
            plob,
        })
    }
}
