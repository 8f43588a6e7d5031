use num_complex::Complex64;

use super::passive::{apply_two_mode_vec, PassiveTable};
use super::{strides, unravel, FockKet, Transformed, DEFAULT_LEAKAGE_THRESHOLD};
use crate::error::{invalid, Error, Result};
use crate::optics::BeamsplitterConvention;

/// Dense operator on a truncated multi-mode space, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl DensityMatrix {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            dims,
            data: vec![ZERO; d * d],
        }
    }

    pub fn from_ket(ket: &FockKet) -> Self {
        let mut rho = Self::zeros(ket.dims().to_vec());
        rho.add_outer(ket, 1.0);
        rho
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re).sum()
    }

    /// Adds `w |ψ⟩⟨ψ|`.
    pub fn add_outer(&mut self, ket: &FockKet, weight: f64) {
        let d = self.dim();
        let a = ket.amplitudes();
        for (i, ai) in a.iter().enumerate() {
            if *ai == ZERO {
                continue;
            }
            let wi = ai * weight;
            let row = &mut self.data[i * d..(i + 1) * d];
            for (r, aj) in row.iter_mut().zip(a) {
                *r += wi * aj.conj();
            }
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(invalid("state", "operators have different mode dimensions"));
        }
        Ok(())
    }

    pub fn added(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self {
            dims: self.dims.clone(),
            data,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Divides by the trace.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::HeraldImpossible(t));
        }
        Ok(self.scaled(1.0 / t))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(invalid("mode", format!("{mode} out of range for {} modes", self.dims.len())));
        }
        Ok(())
    }

    /// Splits each flat index into (index over `keep`, index over the rest).
    fn split_indices(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>, usize, usize)> {
        for (n, &k) in keep.iter().enumerate() {
            if k >= dims.len() || keep[..n].contains(&k) {
                return Err(invalid("modes_to_keep", format!("invalid or repeated mode {k}")));
            }
        }
        if keep.is_empty() {
            return Err(invalid("modes_to_keep", "must not be empty"));
        }
        let rest: Vec<usize> = (0..dims.len()).filter(|m| !keep.contains(m)).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&k| dims[k]).collect();
        let (ks, rs) = (strides(&keep_dims), strides(&rest_dims));
        let total: usize = dims.iter().product();
        let mut occ = vec![0; dims.len()];
        let mut kidx = Vec::with_capacity(total);
        let mut ridx = Vec::with_capacity(total);
        for idx in 0..total {
            unravel(dims, idx, &mut occ);
            kidx.push(keep.iter().zip(&ks).map(|(&m, s)| occ[m] * s).sum());
            ridx.push(rest.iter().zip(&rs).map(|(&m, s)| occ[m] * s).sum());
        }
        Ok((kidx, ridx, keep_dims.iter().product(), rest_dims.iter().product()))
    }

    /// `w · Tr_rest |ψ⟩⟨ψ|` on the modes in `keep`, in that order.
    pub fn reduced_from_ket(ket: &FockKet, keep: &[usize], weight: f64) -> Result<Self> {
        let (kidx, ridx, kd, rd) = Self::split_indices(ket.dims(), keep)?;
        let mut psi = vec![ZERO; kd * rd];
        for (idx, a) in ket.amplitudes().iter().enumerate() {
            psi[ridx[idx] * kd + kidx[idx]] = *a;
        }
        let mut out = Self::zeros(keep.iter().map(|&k| ket.dims()[k]).collect());
        for e in 0..rd {
            let col = &psi[e * kd..(e + 1) * kd];
            for (i, ai) in col.iter().enumerate() {
                if *ai == ZERO {
                    continue;
                }
                let wi = ai * weight;
                for (j, aj) in col.iter().enumerate() {
                    out.data[i * kd + j] += wi * aj.conj();
                }
            }
        }
        Ok(out)
    }

    /// Reduced operator on `keep`, in that order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let (kidx, ridx, kd, _) = Self::split_indices(&self.dims, keep)?;
        let d = self.dim();
        let mut out = Self::zeros(keep.iter().map(|&k| self.dims[k]).collect());
        for a in 0..d {
            for b in 0..d {
                if ridx[a] == ridx[b] {
                    out.data[kidx[a] * kd + kidx[b]] += self.data[a * d + b];
                }
            }
        }
        Ok(out)
    }

    /// `ρ ⊗ σ`, with `σ`'s modes last.
    pub fn tensor(&self, other: &Self) -> Self {
        let (d1, d2) = (self.dim(), other.dim());
        let d = d1 * d2;
        let mut data = vec![ZERO; d * d];
        for a in 0..d1 {
            for c in 0..d1 {
                let x = self.data[a * d1 + c];
                if x == ZERO {
                    continue;
                }
                for b in 0..d2 {
                    for e in 0..d2 {
                        data[(a * d2 + b) * d + c * d2 + e] = x * other.data[b * d2 + e];
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, data }
    }

    /// Flat-index map from a layout with `mode` set to `dim_new` levels into
    /// the current layout; `None` where the level does not exist here.
    fn level_map(&self, mode: usize, dim_new: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut dims = self.dims.clone();
        dims[mode] = dim_new;
        let st = strides(&self.dims);
        let total: usize = dims.iter().product();
        let mut occ = vec![0; dims.len()];
        let map = (0..total)
            .map(|idx| {
                unravel(&dims, idx, &mut occ);
                if occ[mode] >= self.dims[mode] {
                    None
                } else {
                    Some(occ.iter().zip(&st).map(|(o, s)| o * s).sum())
                }
            })
            .collect();
        (dims, map)
    }

    /// Changes the cutoff of one mode, truncating or zero-padding.
    pub fn with_mode_cutoff(&self, mode: usize, cutoff: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (dims, map) = self.level_map(mode, cutoff + 1);
        let mut out = Self::zeros(dims);
        let (d, dn) = (self.dim(), out.dim());
        for (a, ma) in map.iter().enumerate() {
            let Some(ma) = ma else { continue };
            for (b, mb) in map.iter().enumerate() {
                if let Some(mb) = mb {
                    out.data[a * dn + b] = self.data[ma * d + mb];
                }
            }
        }
        Ok(out)
    }

    /// `⟨n| ρ |n⟩` on `mode`, with the mode removed and no renormalization.
    pub fn project_unnormalized(&self, mode: usize, outcome: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if self.n_modes() < 2 {
            return Err(invalid("mode", "cannot project the only mode"));
        }
        if outcome >= self.dims[mode] {
            return Err(invalid("fock_outcome", format!("{outcome} exceeds the cutoff of mode {mode}")));
        }
        let mut dims = self.dims.clone();
        dims.remove(mode);
        let st = strides(&self.dims);
        let map: Vec<usize> = super::base_offsets(&self.dims, &[mode])
            .into_iter()
            .map(|b| b + outcome * st[mode])
            .collect();
        let d = self.dim();
        let dn = map.len();
        let mut data = vec![ZERO; dn * dn];
        for (a, &ma) in map.iter().enumerate() {
            for (b, &mb) in map.iter().enumerate() {
                data[a * dn + b] = self.data[ma * d + mb];
            }
        }
        Ok(Self { dims, data })
    }

    /// Projects `mode` onto `|outcome⟩`; returns the renormalized reduced
    /// state and the outcome probability.
    pub fn project(&self, mode: usize, outcome: usize) -> Result<(Self, f64)> {
        let total = self.trace();
        let reduced = self.project_unnormalized(mode, outcome)?;
        let p = reduced.trace() / total;
        if !(p >= crate::gaussian::MIN_HERALD_PROBABILITY) {
            return Err(Error::HeraldImpossible(p));
        }
        Ok((reduced.normalized()?, p))
    }

    pub fn apply_phase_shift(&self, mode: usize, phi: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let st = strides(&self.dims);
        let d = self.dim();
        let level = |idx: usize| ((idx / st[mode]) % self.dims[mode]) as f64;
        let mut out = self.clone();
        for a in 0..d {
            for b in 0..d {
                out.data[a * d + b] *= Complex64::from_polar(1.0, phi * (level(a) - level(b)));
            }
        }
        Ok(out)
    }

    /// `U ρ U†` for a two-mode passive unitary.
    pub fn apply_two_mode_passive(&self, i: usize, j: usize, w: &[[Complex64; 2]; 2]) -> Result<Transformed<Self>> {
        if i >= self.n_modes() || j >= self.n_modes() || i == j {
            return Err(invalid("mode", format!("invalid mode pair ({i}, {j})")));
        }
        let table = PassiveTable::new(w, self.dims[i] - 1, self.dims[j] - 1);
        let d = self.dim();
        let mut col = vec![ZERO; d];
        let mut res = vec![ZERO; d];
        // M = U ρ column by column, stored row-major.
        let mut m = vec![ZERO; d * d];
        for c in 0..d {
            for r in 0..d {
                col[r] = self.data[r * d + c];
            }
            apply_two_mode_vec(&self.dims, &col, i, j, &table, &mut res);
            for r in 0..d {
                m[r * d + c] = res[r];
            }
        }
        // ρ' = U M† since ρ is Hermitian; column c of M† is row c of M conjugated.
        let mut data = vec![ZERO; d * d];
        for c in 0..d {
            for r in 0..d {
                col[r] = m[c * d + r].conj();
            }
            apply_two_mode_vec(&self.dims, &col, i, j, &table, &mut res);
            for r in 0..d {
                data[r * d + c] = res[r];
            }
        }
        let state = Self {
            dims: self.dims.clone(),
            data,
        };
        let before = self.trace();
        let leakage = (before - state.trace()).max(0.0);
        let flagged = leakage > DEFAULT_LEAKAGE_THRESHOLD * before;
        Ok(Transformed {
            state,
            leakage,
            flagged,
        })
    }

    pub fn apply_beamsplitter(
        &self,
        i: usize,
        j: usize,
        transmissivity: f64,
        convention: BeamsplitterConvention,
    ) -> Result<Transformed<Self>> {
        let w = super::beamsplitter_transfer(transmissivity, convention)?;
        self.apply_two_mode_passive(i, j, &w)
    }

    pub(crate) fn data(&self) -> &[Complex64] {
        &self.data
    }
}
