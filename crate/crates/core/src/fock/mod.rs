//! Truncated Fock-space simulation.
//!
//! States live on a tensor product of per-mode spaces `{|0⟩, …, |c_k⟩}`.
//! Amplitudes are stored row-major with mode 0 most significant. Pure
//! states are [`FockKet`]s, mixtures of kets are [`BranchMixture`]s and
//! small dense operators are [`DensityMatrix`]s.

mod channel;
mod density;
mod ket;
mod mixture;
mod moments;
mod passive;

pub use channel::{make_kraus_channel, KrausChannel, KRAUS_TAIL_BUDGET};
pub use density::DensityMatrix;
pub use ket::{single_photon_entangler, tmsv_ket, tmsv_truncation_error, FockKet};
pub use mixture::{Branch, BranchMixture, ChannelOptions};
pub use passive::{beamsplitter_transfer, Transformed, DEFAULT_LEAKAGE_THRESHOLD};

pub use num_complex::Complex64;

/// Row-major strides for per-mode dimensions.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Writes the occupation numbers of flat index `idx` into `occ`.
pub(crate) fn unravel(dims: &[usize], mut idx: usize, occ: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        occ[k] = idx % dims[k];
        idx /= dims[k];
    }
}

/// Flat offsets of every basis state that has zero photons in `skip`.
pub(crate) fn base_offsets(dims: &[usize], skip: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offsets = vec![0usize];
    for (k, &d) in dims.iter().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        let step = st[k];
        offsets = offsets
            .iter()
            .flat_map(|&o| (0..d).map(move |n| o + n * step))
            .collect();
    }
    offsets
}

/// `ln n!` for small `n`.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}
