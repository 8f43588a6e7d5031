use num_complex::Complex64;

use super::{base_offsets, strides};
use crate::error::{check_range, invalid, Error, Result};

/// Pure (possibly unnormalized) multi-mode state at a per-mode cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct FockKet {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
}

impl FockKet {
    /// The zero vector.
    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 2) {
            return Err(invalid("cutoff", "every mode needs a cutoff of at least 1"));
        }
        let len = dims.iter().product();
        Ok(Self {
            dims,
            amps: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    /// Fock basis state with the given occupations.
    pub fn basis(dims: Vec<usize>, occupation: &[usize]) -> Result<Self> {
        let mut k = Self::zeros(dims)?;
        let idx = k.index_of(occupation)?;
        k.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(k)
    }

    /// Vacuum on `n_modes` modes at a uniform cutoff.
    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::basis(vec![cutoff + 1; n_modes], &vec![0; n_modes])
    }

    /// Wraps amplitudes; the length must match the dimensions.
    pub fn from_amplitudes(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        let k = Self::zeros(dims)?;
        if amps.len() != k.amps.len() {
            return Err(invalid("amplitudes", "length does not match the mode dimensions"));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(invalid("amplitudes", "non-finite amplitude"));
        }
        Ok(Self { dims: k.dims, amps })
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    /// Local Hilbert-space dimensions (cutoff + 1 per mode).
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.dims[mode] - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    fn index_of(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.dims.len() {
            return Err(invalid("occupation", "wrong number of modes"));
        }
        let st = strides(&self.dims);
        let mut idx = 0;
        for (k, &n) in occupation.iter().enumerate() {
            if n >= self.dims[k] {
                return Err(invalid("occupation", format!("{n} photons exceed the cutoff of mode {k}")));
            }
            idx += n * st[k];
        }
        Ok(idx)
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Result<Complex64> {
        Ok(self.amps[self.index_of(occupation)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for a in &mut self.amps {
            *a *= factor;
        }
        self
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(invalid("mode", format!("{mode} out of range for {} modes", self.dims.len())));
        }
        Ok(())
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &FockKet) -> FockKet {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        FockKet { dims, amps }
    }

    /// Changes the cutoff of one mode. Lowering it discards the amplitudes
    /// above the new cutoff; raising it pads with zeros.
    pub fn with_mode_cutoff(&self, mode: usize, cutoff: usize) -> Result<FockKet> {
        self.check_mode(mode)?;
        let mut dims = self.dims.clone();
        dims[mode] = cutoff + 1;
        let mut out = FockKet::zeros(dims)?;
        let (old_st, new_st) = (strides(&self.dims), strides(&out.dims));
        let keep = self.dims[mode].min(cutoff + 1);
        for base in base_offsets(&self.dims, &[mode]) {
            // Offsets of the other modes coincide in both layouts up to the
            // stride change of the modes before `mode`.
            let new_base = remap(base, &self.dims, &old_st, &new_st);
            for n in 0..keep {
                out.amps[new_base + n * new_st[mode]] = self.amps[base + n * old_st[mode]];
            }
        }
        Ok(out)
    }

    /// Multiplies the level-`n` amplitudes of `mode` by `e^{iφn}`.
    pub fn apply_phase_shift(&self, mode: usize, phi: f64) -> Result<FockKet> {
        self.check_mode(mode)?;
        check_range("phi", phi, f64::MIN, f64::MAX)?;
        let mut out = self.clone();
        let st = strides(&self.dims);
        let phases: Vec<Complex64> = (0..self.dims[mode]).map(|n| Complex64::from_polar(1.0, phi * n as f64)).collect();
        for (idx, a) in out.amps.iter_mut().enumerate() {
            *a *= phases[(idx / st[mode]) % self.dims[mode]];
        }
        Ok(out)
    }

    /// Applies `⟨n|` on `mode` and removes it, without renormalizing.
    pub fn project_unnormalized(&self, mode: usize, outcome: usize) -> Result<FockKet> {
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
        let amps = base_offsets(&self.dims, &[mode])
            .into_iter()
            .map(|b| self.amps[b + outcome * st[mode]])
            .collect();
        Ok(FockKet { dims, amps })
    }

    /// Projects `mode` onto `|outcome⟩`, returning the renormalized reduced
    /// state and the outcome probability.
    pub fn project(&self, mode: usize, outcome: usize) -> Result<(FockKet, f64)> {
        let total = self.norm_sqr();
        let reduced = self.project_unnormalized(mode, outcome)?;
        let p = reduced.norm_sqr() / total;
        if !(p >= crate::gaussian::MIN_HERALD_PROBABILITY) {
            return Err(Error::HeraldImpossible(p));
        }
        let scale = (1.0 / (p * total)).sqrt();
        Ok((reduced.scaled(scale), p))
    }
}

/// Maps a flat offset between two layouts that differ in one mode's
/// dimension, for offsets with zero occupation in that mode.
fn remap(offset: usize, old_dims: &[usize], old_st: &[usize], new_st: &[usize]) -> usize {
    let mut rest = offset;
    let mut out = 0;
    for k in 0..old_dims.len() {
        let n = rest / old_st[k];
        rest %= old_st[k];
        out += n * new_st[k];
    }
    out
}

/// Truncated two-mode squeezed vacuum `Σ (−tanh r)ⁿ/cosh r |n, n⟩`.
/// The norm is short of one by [`tmsv_truncation_error`].
pub fn tmsv_ket(r: f64, cutoff: usize) -> Result<FockKet> {
    check_range("r", r, 0.0, f64::MAX)?;
    if cutoff < 1 {
        return Err(invalid("cutoff", "must be at least 1"));
    }
    let d = cutoff + 1;
    let mut k = FockKet::zeros(vec![d, d])?;
    let t = -r.tanh();
    let mut amp = 1.0 / r.cosh();
    for n in 0..d {
        k.amps[n * d + n] = Complex64::new(amp, 0.0);
        amp *= t;
    }
    Ok(k)
}

/// Probability weight of the TMSV beyond `cutoff`, `tanh^(2(cutoff+1)) r`.
pub fn tmsv_truncation_error(r: f64, cutoff: usize) -> f64 {
    r.tanh().powi(2 * (cutoff as i32 + 1))
}

/// `√T |1, 0⟩ + √(1−T) |0, 1⟩` at cutoff 1, i.e. `|1, 0⟩` sent through a
/// beamsplitter in the matrix convention.
pub fn single_photon_entangler(transmissivity: f64) -> Result<FockKet> {
    if !transmissivity.is_finite() || transmissivity <= 0.0 || transmissivity > 1.0 {
        return Err(invalid("transmissivity", format!("{transmissivity} is outside (0, 1]")));
    }
    let mut k = FockKet::zeros(vec![2, 2])?;
    k.amps[2] = Complex64::new(transmissivity.sqrt(), 0.0);
    k.amps[1] = Complex64::new((1.0 - transmissivity).sqrt(), 0.0);
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn tmsv_amplitudes() {
        let vac = tmsv_ket(0.0, 4).unwrap();
        assert_eq!(vac.amplitude(&[0, 0]).unwrap(), Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(vac.norm_sqr(), 1.0, epsilon = 1e-15);
        let k = tmsv_ket(0.5, 8).unwrap();
        let expect = -(0.5f64.tanh()) / 0.5f64.cosh();
        assert_abs_diff_eq!(k.amplitude(&[1, 1]).unwrap().re, expect, epsilon = 1e-15);
        assert_eq!(k.amplitude(&[1, 2]).unwrap(), Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(k.norm_sqr(), 1.0 - tmsv_truncation_error(0.5, 8), epsilon = 1e-14);
        assert!(tmsv_ket(0.5, 0).is_err());
    }

    #[test]
    fn entangler_amplitudes() {
        let k = single_photon_entangler(0.5).unwrap();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(k.amplitude(&[1, 0]).unwrap().re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(k.amplitude(&[0, 1]).unwrap().re, h, epsilon = 1e-15);
        let one = single_photon_entangler(1.0).unwrap();
        assert_eq!(one.amplitude(&[1, 0]).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(one.amplitude(&[0, 1]).unwrap(), Complex64::new(0.0, 0.0));
        let g: f64 = 2.0;
        let t = 1.0 / (1.0 + g * g);
        let k = single_photon_entangler(t).unwrap();
        assert_abs_diff_eq!(k.amplitude(&[1, 0]).unwrap().re, 1.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.amplitude(&[0, 1]).unwrap().re, 2.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert!(single_photon_entangler(0.0).is_err());
        assert!(single_photon_entangler(1.5).is_err());
    }

    #[test]
    fn phase_shift_examples() {
        let k = FockKet::basis(vec![3], &[2]).unwrap();
        let same = k.apply_phase_shift(0, 0.0).unwrap();
        assert_eq!(same, k);
        let turned = k.apply_phase_shift(0, std::f64::consts::PI).unwrap();
        assert_abs_diff_eq!(turned.amplitude(&[2]).unwrap().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(turned.amplitude(&[2]).unwrap().im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let h = 0.5f64.sqrt();
        let k = FockKet::from_amplitudes(vec![2, 2], vec![0.0.into(), h.into(), h.into(), 0.0.into()]).unwrap();
        let (rest, p) = k.project(1, 0).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rest.amplitude(&[1]).unwrap().re, 1.0, epsilon = 1e-15);

        let vac = FockKet::vacuum(2, 3).unwrap();
        let (rest, p) = vac.project(1, 0).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(rest, FockKet::vacuum(1, 3).unwrap());

        let one = FockKet::basis(vec![2, 2], &[1, 0]).unwrap();
        assert!(matches!(one.project(0, 0), Err(Error::HeraldImpossible(_))));
        assert!(one.project(0, 5).is_err());
    }

    #[test]
    fn cutoff_change_round_trip() {
        let k = tmsv_ket(0.4, 3).unwrap().tensor(&FockKet::basis(vec![2], &[1]).unwrap());
        let wide = k.with_mode_cutoff(1, 5).unwrap();
        assert_eq!(wide.dims(), &[4, 6, 2]);
        assert_eq!(wide.amplitude(&[2, 2, 1]).unwrap(), k.amplitude(&[2, 2, 1]).unwrap());
        let back = wide.with_mode_cutoff(1, 3).unwrap();
        assert_eq!(back, k);
        let narrow = k.with_mode_cutoff(0, 1).unwrap();
        assert_abs_diff_eq!(
            narrow.norm_sqr(),
            (1.0 + 0.4f64.tanh().powi(2)) / 0.4f64.cosh().powi(2),
            epsilon = 1e-15
        );
    }

    proptest! {
        #[test]
        fn phase_shift_preserves_norm(r in 0.0..1.0f64, phi in -10.0..10.0f64) {
            let k = tmsv_ket(r, 6).unwrap();
            let s = k.apply_phase_shift(1, phi).unwrap();
            prop_assert!((s.norm_sqr() - k.norm_sqr()).abs() < 1e-14);
        }
    }
}
