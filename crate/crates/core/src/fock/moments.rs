use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{strides, unravel, DensityMatrix};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

/// First moments above this are rejected by covariance extraction.
pub const MEAN_TOLERANCE: f64 = 1e-9;

impl DensityMatrix {
    /// `Tr(ρ X)` for `X = Π a_r† · Π a_l` (lowering operators applied first).
    fn expect_ladder(&self, lower: &[usize], raise: &[usize]) -> Complex64 {
        let dims = self.dims();
        let st = strides(dims);
        let d = self.dim();
        let data = self.data();
        let mut occ = vec![0; dims.len()];
        let mut sum = Complex64::new(0.0, 0.0);
        'basis: for m in 0..d {
            unravel(dims, m, &mut occ);
            let mut c = 1.0;
            for &l in lower {
                if occ[l] == 0 {
                    continue 'basis;
                }
                c *= (occ[l] as f64).sqrt();
                occ[l] -= 1;
            }
            for &r in raise {
                occ[r] += 1;
                if occ[r] >= dims[r] {
                    continue 'basis;
                }
                c *= (occ[r] as f64).sqrt();
            }
            let target: usize = occ.iter().zip(&st).map(|(o, s)| o * s).sum();
            // ⟨m| ρ X |m⟩ = c ⟨m| ρ |X(m)⟩
            sum += data[m * d + target] * c;
        }
        sum
    }

    /// Covariance matrix over all modes, normalized by the trace. Fails if
    /// any first moment exceeds [`MEAN_TOLERANCE`].
    pub fn extract_cm(&self) -> Result<CovarianceMatrix> {
        let rho = self.normalized()?;
        let n = rho.n_modes();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let a = rho.expect_ladder(&[j], &[]);
            worst = worst.max(2.0 * a.re.abs()).max(2.0 * a.im.abs());
        }
        if worst > MEAN_TOLERANCE {
            return Err(Error::NonZeroMean(worst));
        }
        let mut v = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in j..n {
                // M = ⟨a_j a_k⟩, N = ⟨a_j† a_k⟩, N' = ⟨a_k† a_j⟩
                let m = rho.expect_ladder(&[j, k], &[]);
                let nn = rho.expect_ladder(&[k], &[j]);
                let nt = rho.expect_ladder(&[j], &[k]);
                let delta = if j == k { 1.0 } else { 0.0 };
                let xx = 2.0 * (m.re + nn.re) + delta;
                let pp = -2.0 * m.re + 2.0 * nn.re + delta;
                let xp = 2.0 * (m.im + nn.im);
                let px = 2.0 * (m.im + nt.im);
                v[(2 * j, 2 * k)] = xx;
                v[(2 * k, 2 * j)] = xx;
                v[(2 * j + 1, 2 * k + 1)] = pp;
                v[(2 * k + 1, 2 * j + 1)] = pp;
                v[(2 * j, 2 * k + 1)] = xp;
                v[(2 * k + 1, 2 * j)] = xp;
                v[(2 * k, 2 * j + 1)] = px;
                v[(2 * j + 1, 2 * k)] = px;
            }
        }
        CovarianceMatrix::new(v)
    }
}
