use num_complex::Complex64;

use super::{base_offsets, ln_factorial, strides, FockKet};
use crate::error::{invalid, Result};
use crate::optics::{self, BeamsplitterConvention};

/// Leakage above this fraction of the input norm flags a result.
pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-6;

/// Output of a norm-preserving operation on a truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed<T> {
    pub state: T,
    /// Squared norm pushed above the cutoff and lost.
    pub leakage: f64,
    /// Set when `leakage` exceeds [`DEFAULT_LEAKAGE_THRESHOLD`] of the input norm.
    pub flagged: bool,
}

/// Two-mode transfer matrix of a beamsplitter.
pub fn beamsplitter_transfer(transmissivity: f64, convention: BeamsplitterConvention) -> Result<[[Complex64; 2]; 2]> {
    optics::beamsplitter(transmissivity, convention)
}

/// Fock-basis matrix elements of a two-mode passive unitary, grouped by
/// total photon number. `coef[n][m][p]` is `⟨p, n+m−p| U |n, m⟩`.
pub(crate) struct PassiveTable {
    coef: Vec<Vec<Vec<Complex64>>>,
}

impl PassiveTable {
    pub(crate) fn new(w: &[[Complex64; 2]; 2], max_n: usize, max_m: usize) -> Self {
        // U a_i† U† = w00 a_i† + w10 a_j†, U a_j† U† = w01 a_i† + w11 a_j†.
        let (a, b, c, d) = (w[0][0], w[1][0], w[0][1], w[1][1]);
        let binom = |n: usize, k: usize| (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp();
        let powc = |z: Complex64, k: usize| z.powu(k as u32);
        let coef = (0..=max_n)
            .map(|n| {
                (0..=max_m)
                    .map(|m| {
                        let mut poly = vec![Complex64::new(0.0, 0.0); n + m + 1];
                        for x in 0..=n {
                            let left = powc(a, x) * powc(b, n - x) * binom(n, x);
                            for y in 0..=m {
                                poly[x + y] += left * powc(c, y) * powc(d, m - y) * binom(m, y);
                            }
                        }
                        let norm_in = -0.5 * (ln_factorial(n) + ln_factorial(m));
                        for (p, v) in poly.iter_mut().enumerate() {
                            let q = n + m - p;
                            *v *= (norm_in + 0.5 * (ln_factorial(p) + ln_factorial(q))).exp();
                        }
                        poly
                    })
                    .collect()
            })
            .collect();
        Self { coef }
    }
}

/// Applies a two-mode passive unitary to a state vector in place of `out`.
/// Returns the squared norm that left the truncated space.
pub(crate) fn apply_two_mode_vec(
    dims: &[usize],
    input: &[Complex64],
    i: usize,
    j: usize,
    table: &PassiveTable,
    out: &mut [Complex64],
) -> f64 {
    let st = strides(dims);
    let (di, dj) = (dims[i], dims[j]);
    let (si, sj) = (st[i], st[j]);
    let zero = Complex64::new(0.0, 0.0);
    out.iter_mut().for_each(|v| *v = zero);
    let mut leakage = 0.0;
    let mut buf = vec![zero; di + dj];
    for base in base_offsets(dims, &[i, j]) {
        for total in 0..(di + dj - 1) {
            let lo = total.saturating_sub(dj - 1);
            let hi = total.min(di - 1);
            buf[..=total].iter_mut().for_each(|v| *v = zero);
            let mut any = false;
            for n in lo..=hi {
                let amp = input[base + n * si + (total - n) * sj];
                if amp == zero {
                    continue;
                }
                any = true;
                for (p, c) in table.coef[n][total - n].iter().enumerate() {
                    buf[p] += amp * c;
                }
            }
            if !any {
                continue;
            }
            for (p, v) in buf[..=total].iter().enumerate() {
                let q = total - p;
                if p < di && q < dj {
                    out[base + p * si + q * sj] = *v;
                } else {
                    leakage += v.norm_sqr();
                }
            }
        }
    }
    leakage
}

fn check_pair(n_modes: usize, i: usize, j: usize) -> Result<()> {
    if i >= n_modes || j >= n_modes || i == j {
        return Err(invalid("mode", format!("invalid mode pair ({i}, {j}) for {n_modes} modes")));
    }
    Ok(())
}

impl FockKet {
    /// Applies a two-mode passive unitary given by its transfer matrix.
    pub fn apply_two_mode_passive(&self, i: usize, j: usize, w: &[[Complex64; 2]; 2]) -> Result<Transformed<FockKet>> {
        check_pair(self.n_modes(), i, j)?;
        let dims = self.dims().to_vec();
        let table = PassiveTable::new(w, dims[i] - 1, dims[j] - 1);
        let mut out = self.clone();
        let leakage = apply_two_mode_vec(&dims, self.amplitudes(), i, j, &table, out.amplitudes_mut());
        let flagged = leakage > DEFAULT_LEAKAGE_THRESHOLD * self.norm_sqr();
        Ok(Transformed {
            state: out,
            leakage,
            flagged,
        })
    }

    /// Beamsplitter of transmissivity `T` between modes `i` and `j`.
    pub fn apply_beamsplitter(
        &self,
        i: usize,
        j: usize,
        transmissivity: f64,
        convention: BeamsplitterConvention,
    ) -> Result<Transformed<FockKet>> {
        let w = beamsplitter_transfer(transmissivity, convention)?;
        self.apply_two_mode_passive(i, j, &w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    const EXP: BeamsplitterConvention = BeamsplitterConvention::Exponential;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_at_full_transmission() {
        let k = crate::fock::tmsv_ket(0.5, 5).unwrap();
        let t = k.apply_beamsplitter(0, 1, 1.0, EXP).unwrap();
        assert_eq!(t.leakage, 0.0);
        for (a, b) in t.state.amplitudes().iter().zip(k.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_photon_splits_with_minus_sign() {
        let k = FockKet::basis(vec![2, 2], &[1, 0]).unwrap();
        let out = k.apply_beamsplitter(0, 1, 0.5, EXP).unwrap().state;
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(out.amplitude(&[1, 0]).unwrap().re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[0, 1]).unwrap().re, -h, epsilon = 1e-15);
    }

    /// Matrix exponential of `θ(a_i† a_j − a_i a_j†)` on a two-mode space by
    /// a Taylor series, as a reference for the table-based kernel.
    fn exponential_oracle(theta: f64, d: usize) -> DMatrix<f64> {
        let dim = d * d;
        let mut gen = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..d {
            for m in 0..d {
                let col = n * d + m;
                // a_i† a_j |n, m⟩ = √((n+1) m) |n+1, m−1⟩
                if m > 0 && n + 1 < d {
                    gen[((n + 1) * d + m - 1, col)] += theta * (((n + 1) * m) as f64).sqrt();
                }
                // − a_i a_j† |n, m⟩ = −√(n (m+1)) |n−1, m+1⟩
                if n > 0 && m + 1 < d {
                    gen[((n - 1) * d + m + 1, col)] -= theta * ((n * (m + 1)) as f64).sqrt();
                }
            }
        }
        let mut term = DMatrix::<f64>::identity(dim, dim);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &gen / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let k = FockKet::basis(vec![3, 3], &[1, 1]).unwrap();
        let out = k.apply_beamsplitter(0, 1, 0.5, EXP).unwrap();
        assert_eq!(out.leakage, 0.0);
        assert!(out.state.amplitude(&[1, 1]).unwrap().norm() < 1e-15);
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(out.state.amplitude(&[2, 0]).unwrap().re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.state.amplitude(&[0, 2]).unwrap().re, -h, epsilon = 1e-15);

        let oracle = exponential_oracle(std::f64::consts::FRAC_PI_4, 3);
        for p in 0..3 {
            for q in 0..3 {
                let got = out.state.amplitude(&[p, q]).unwrap().re;
                assert_abs_diff_eq!(got, oracle[(p * 3 + q, 4)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matches_exponential_for_general_transmissivity() {
        let theta: f64 = 0.37;
        let t = theta.cos().powi(2);
        let d = 4;
        let oracle = exponential_oracle(theta, d);
        for n in 0..d {
            for m in 0..d {
                if n + m >= d {
                    continue;
                }
                let k = FockKet::basis(vec![d, d], &[n, m]).unwrap();
                let out = k.apply_beamsplitter(0, 1, t, EXP).unwrap().state;
                for p in 0..d {
                    for q in 0..d {
                        let got = out.amplitude(&[p, q]).unwrap();
                        assert_abs_diff_eq!(got.re, oracle[(p * d + q, n * d + m)], epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn leakage_is_reported() {
        let k = FockKet::basis(vec![2, 2], &[1, 1]).unwrap();
        let out = k.apply_beamsplitter(0, 1, 0.5, EXP).unwrap();
        assert_abs_diff_eq!(out.leakage, 1.0, epsilon = 1e-15);
        assert!(out.flagged);
    }

    #[test]
    fn acts_on_non_adjacent_modes() {
        let k = FockKet::basis(vec![2, 3, 2], &[1, 2, 0]).unwrap();
        let out = k.apply_beamsplitter(2, 0, 0.5, EXP).unwrap().state;
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(out.amplitude(&[1, 2, 0]).unwrap().re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(&[0, 2, 1]).unwrap().re, h, epsilon = 1e-15);
        assert!(k.apply_beamsplitter(1, 1, 0.5, EXP).is_err());
    }

    #[test]
    fn complex_transfer_matrix() {
        let phase = Complex64::from_polar(1.0, 0.3);
        let w = [[phase, c(0.0)], [c(0.0), c(1.0)]];
        let k = FockKet::basis(vec![4, 2], &[3, 1]).unwrap();
        let out = k.apply_two_mode_passive(0, 1, &w).unwrap().state;
        let got = out.amplitude(&[3, 1]).unwrap();
        assert_abs_diff_eq!((got - phase.powu(3)).norm(), 0.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn beamsplitter_preserves_norm_below_cutoff(t in 0.0..1.0f64, n in 0usize..4, m in 0usize..4) {
            let k = FockKet::basis(vec![8, 8], &[n, m]).unwrap();
            let out = k.apply_beamsplitter(0, 1, t, EXP).unwrap();
            prop_assert!(out.leakage == 0.0);
            prop_assert!((out.state.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
