//! Passive linear-optics transfer matrices shared by the Gaussian and Fock
//! backends.
//!
//! A transfer matrix `W` maps annihilation operators as `b_i = Σ_j W_ij a_j`.
//! The same matrix gives the Schrödinger action on creation operators,
//! `U a_j† U† = Σ_i W_ij a_i†`, so both backends share one convention.
//! Composition follows application order: applying `W1` then `W2` is `W2·W1`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_range, invalid, Result};

/// Sign convention for a two-mode beamsplitter of transmissivity `T`, with
/// `t = √T` and `s = √(1−T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamsplitterConvention {
    /// `exp(θ(a_i† a_j − a_i a_j†))`: `a_i† → t a_i† − s a_j†`, `a_j† → s a_i† + t a_j†`.
    /// Used for the balanced splitters of the averaging network and the relay.
    Exponential,
    /// `a_i† → t a_i† + s a_j†`, `a_j† → −s a_i† + t a_j†`.
    /// Used for Bob's single-photon entangler.
    Matrix,
}

/// 2×2 transfer matrix of a beamsplitter acting on an ordered mode pair.
pub fn beamsplitter(transmissivity: f64, convention: BeamsplitterConvention) -> Result<[[Complex64; 2]; 2]> {
    check_range("transmissivity", transmissivity, 0.0, 1.0)?;
    let t = Complex64::new(transmissivity.sqrt(), 0.0);
    let s = Complex64::new((1.0 - transmissivity).sqrt(), 0.0);
    Ok(match convention {
        BeamsplitterConvention::Exponential => [[t, s], [-s, t]],
        BeamsplitterConvention::Matrix => [[t, -s], [s, t]],
    })
}

/// Conjugate transpose of a 2×2 transfer matrix.
pub fn adjoint2(w: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [[w[0][0].conj(), w[1][0].conj()], [w[0][1].conj(), w[1][1].conj()]]
}

/// Embeds a 2×2 transfer matrix on modes `(i, j)` of an `n`-mode identity.
pub fn embed(n: usize, i: usize, j: usize, w: &[[Complex64; 2]; 2]) -> DMatrix<Complex64> {
    let mut m = DMatrix::identity(n, n);
    m[(i, i)] = w[0][0];
    m[(i, j)] = w[0][1];
    m[(j, i)] = w[1][0];
    m[(j, j)] = w[1][1];
    m
}

/// Mode pairs of the balanced encoding network for `n` copies, in application
/// order. Mode 0 carries the signal; every pair gets a 50:50 splitter in the
/// exponential convention, which spreads the signal evenly over all `n` arms.
pub fn averaging_pairs(n: usize) -> Result<Vec<(usize, usize)>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid("ua_copies", format!("{n} is not a power of two")));
    }
    let mut pairs = Vec::new();
    let mut step = 1;
    while step < n {
        for i in 0..step {
            pairs.push((i, i + step));
        }
        step *= 2;
    }
    Ok(pairs)
}

/// Transfer matrix of the balanced encoding network on `n` modes.
pub fn averaging_encoder(n: usize) -> Result<DMatrix<Complex64>> {
    let bs = beamsplitter(0.5, BeamsplitterConvention::Exponential)?;
    let mut w = DMatrix::identity(n, n);
    for (i, j) in averaging_pairs(n)? {
        w = embed(n, i, j, &bs) * w;
    }
    Ok(w)
}

/// Full encode, per-arm phase, decode transfer matrix for the given phases.
pub fn averaging_transfer(phases: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = phases.len();
    let enc = averaging_encoder(n)?;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        phases.iter().map(|&p| Complex64::from_polar(1.0, p)),
    ));
    Ok(enc.adjoint() * d * enc)
}

/// Mean phasor `Z = (1/n) Σ e^{iφ_j}`, the signal-to-signal element of the
/// averaging transfer matrix.
pub fn mean_phasor(phases: &[f64]) -> Complex64 {
    let sum: Complex64 = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).sum();
    sum / phases.len() as f64
}
