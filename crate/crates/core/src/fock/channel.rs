use num_complex::Complex64;

use super::{base_offsets, ln_factorial, strides, FockKet};
use crate::error::{check_range, invalid, Result};
use crate::gaussian::check_eta;

/// Kraus weight that may be discarded when truncating the channel's sums.
pub const KRAUS_TAIL_BUDGET: f64 = 1e-8;

/// One factor of a Kraus operator `B_k A_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Loss(usize),
    Gain(usize),
}

/// Thermal-loss channel of transmissivity `η` and excess noise `ε` as a pure
/// loss of transmissivity `τ = η/G` followed by a quantum-limited amplifier
/// of gain `G = ηε/2 + 1`.
///
/// Loss operators `A_l = √((1−τ)^l / l!) τ^{n/2} a^l`; amplifier operators
/// `B_k = √((1/k!)(1/G)((G−1)/G)^k) a†^k G^{−n/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    pub eta: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub gain: f64,
    pub max_loss_index: usize,
    pub max_gain_index: usize,
}

/// Builds the channel with index bounds sized for inputs up to `cutoff`
/// photons: every loss index is kept and the gain sum is cut once the tail
/// for a `cutoff`-photon input is below [`KRAUS_TAIL_BUDGET`] of the weight
/// the amplifier moves out of `k = 0`. The budget is relative because at
/// long distance that weight is itself tiny and carries all the excess noise.
pub fn make_kraus_channel(eta: f64, epsilon: f64, cutoff: usize) -> Result<KrausChannel> {
    check_eta(eta)?;
    check_range("epsilon", epsilon, 0.0, f64::MAX)?;
    let gain = eta * epsilon / 2.0 + 1.0;
    let tau = eta / gain;
    let mut channel = KrausChannel {
        eta,
        epsilon,
        tau,
        gain,
        max_loss_index: cutoff,
        max_gain_index: 0,
    };
    let noise = channel.noise_weight(cutoff);
    if noise > 0.0 {
        let mut tail = noise;
        let mut k = 0;
        while tail >= KRAUS_TAIL_BUDGET * noise && k < MAX_GAIN_INDEX {
            k += 1;
            tail -= channel.gain_weight(cutoff, k);
        }
        channel.max_gain_index = k;
    }
    Ok(channel)
}

/// Hard stop for the gain sum; only reached for absurd noise levels.
const MAX_GAIN_INDEX: usize = 4096;

impl KrausChannel {
    /// `⟨m−l| A_l |m⟩`.
    pub fn loss_element(&self, l: usize, m: usize) -> f64 {
        if l > m {
            return 0.0;
        }
        if l > 0 && self.tau >= 1.0 {
            return 0.0;
        }
        let ln = if l > 0 { l as f64 * (1.0 - self.tau).ln() } else { 0.0 } + (m - l) as f64 * self.tau.ln()
            + ln_factorial(m)
            - ln_factorial(m - l)
            - ln_factorial(l);
        (0.5 * ln).exp()
    }

    /// `G − 1`, kept apart from `G` so tiny excess noise survives rounding.
    pub fn excess(&self) -> f64 {
        self.eta * self.epsilon / 2.0
    }

    /// `⟨m+k| B_k |m⟩`.
    pub fn gain_element(&self, k: usize, m: usize) -> f64 {
        let x = self.excess();
        if x <= 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let ln_g = x.ln_1p();
        let ln = k as f64 * (x.ln() - ln_g) - (m as f64 + 1.0) * ln_g + ln_factorial(m + k)
            - ln_factorial(m)
            - ln_factorial(k);
        (0.5 * ln).exp()
    }

    /// `1 − ‖B_0 |m⟩‖² = 1 − G^{−(m+1)}`, the weight sent to `k ≥ 1`.
    pub fn noise_weight(&self, m: usize) -> f64 {
        -(-(m as f64 + 1.0) * self.excess().ln_1p()).exp_m1()
    }

    /// `‖B_k |m⟩‖²`, a negative-binomial weight in `k`.
    pub fn gain_weight(&self, m: usize, k: usize) -> f64 {
        self.gain_element(k, m).powi(2)
    }

    /// Dense matrix of `B_k A_l` on a single mode with `dim` levels, column
    /// index = input level. Entries above the space are dropped.
    pub fn kraus_matrix(&self, l: usize, k: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; dim]; dim];
        for n in 0..dim {
            if n < l {
                continue;
            }
            let out = n - l + k;
            if out < dim {
                m[out][n] = self.gain_element(k, n - l) * self.loss_element(l, n);
            }
        }
        m
    }

    /// Applies one Kraus stage to `mode` of a ket. Returns the image
    /// restricted to `out_dim` levels of that mode, together with the squared
    /// norm the untruncated image would have had.
    pub(crate) fn apply_stage(&self, ket: &FockKet, mode: usize, stage: Stage, out_dim: usize) -> Result<(FockKet, f64)> {
        ket.check_mode(mode)?;
        let dims = ket.dims();
        let mut out_dims = dims.to_vec();
        out_dims[mode] = out_dim;
        let mut out = FockKet::zeros(out_dims)?;
        let (st, out_st) = (strides(dims), strides(out.dims()));
        let d = dims[mode];
        // (source level, target level, coefficient)
        let moves: Vec<(usize, usize, f64)> = match stage {
            Stage::Loss(l) => (l..d).map(|n| (n, n - l, self.loss_element(l, n))).collect(),
            Stage::Gain(k) => (0..d).map(|n| (n, n + k, self.gain_element(k, n))).collect(),
        };
        let mut ideal = 0.0;
        let amps = ket.amplitudes();
        let out_amps = out.amplitudes_mut();
        for base in base_offsets(dims, &[mode]) {
            let out_base = relocate(base, &st, &out_st, mode);
            for &(n, target, c) in &moves {
                let a: Complex64 = amps[base + n * st[mode]];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let v = a * c;
                ideal += v.norm_sqr();
                if target < out_dim {
                    out_amps[out_base + target * out_st[mode]] = v;
                }
            }
        }
        Ok((out, ideal))
    }

    /// Deviation of `Σ A_l†A_l` and `Σ B_k†B_k` from the identity, on input
    /// levels up to `dim − 1`, with the amplifier sum cut at
    /// `max_gain_index` but its output unrestricted.
    pub fn completeness_defect(&self, dim: usize) -> (f64, f64) {
        let mut loss: f64 = 0.0;
        let mut gain: f64 = 0.0;
        for m in 0..dim {
            let a: f64 = (0..=m.min(self.max_loss_index)).map(|l| self.loss_element(l, m).powi(2)).sum();
            let b: f64 = (0..=self.max_gain_index).map(|k| self.gain_weight(m, k)).sum();
            loss = loss.max((a - 1.0).abs());
            gain = gain.max((b - 1.0).abs());
        }
        (loss, gain)
    }
}

/// Maps an offset with zero occupation in `mode` between two layouts that
/// differ only in that mode's dimension.
pub(crate) fn relocate(offset: usize, st: &[usize], out_st: &[usize], mode: usize) -> usize {
    let mut rest = offset;
    let mut out = 0;
    for k in 0..st.len() {
        let n = rest / st[k];
        rest %= st[k];
        if k != mode {
            out += n * out_st[k];
        }
    }
    out
}

pub(crate) fn check_out_dim(out_dim: usize) -> Result<usize> {
    if out_dim < 1 {
        return Err(invalid("cutoff", "output dimension must be positive"));
    }
    Ok(out_dim)
}
