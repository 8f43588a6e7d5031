//! Covariance-matrix algebra for zero-mean Gaussian states.
//!
//! Units are shot-noise units (`ħ = 2`, vacuum variance 1) with quadratures
//! ordered `(x₁, p₁, x₂, p₂, …)`, `x = a + a†` and `p = i(a† − a)`.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{check_range, invalid, Error, Result};
use crate::optics;

/// Elementwise symmetry tolerance accepted by [`CovarianceMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Symplectic eigenvalues may undershoot 1 by at most this much.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Herald probabilities below this are treated as impossible.
pub const MIN_HERALD_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    Homodyne(Quadrature),
    Heterodyne,
}

/// Symmetric, positive-definite, physical covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

/// A conditioned covariance matrix together with the probability of the
/// herald that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedCm {
    pub cm: CovarianceMatrix,
    pub probability: f64,
}

/// Block-diagonal symplectic form `⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Raw symplectic spectrum, descending, without clamping.
fn raw_symplectic_spectrum(entries: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = entries.nrows() / 2;
    let eig = SymmetricEigen::new(entries.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Unphysical("matrix is not positive definite".into()));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let k = &root * symplectic_form(n) * &root;
    let ktk = symmetrized(k.transpose() * &k);
    let mut nu2: Vec<f64> = SymmetricEigen::new(ktk).eigenvalues.iter().copied().collect();
    nu2.sort_by(|a, b| b.total_cmp(a));
    Ok(nu2
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}

impl CovarianceMatrix {
    /// Validates and wraps a matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || dim % 2 != 0 || entries.ncols() != dim {
            return Err(Error::Unphysical(format!(
                "shape {}x{} is not 2N x 2N",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unphysical("non-finite entry".into()));
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::Unphysical(format!("asymmetry {asym:e}")));
        }
        let nu = raw_symplectic_spectrum(&entries)?;
        let min = nu.iter().copied().fold(f64::INFINITY, f64::min);
        if min < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Unphysical(format!(
                "symplectic eigenvalue {min} violates the uncertainty principle"
            )));
        }
        Ok(Self { entries })
    }

    /// Vacuum on `n_modes` modes.
    pub fn identity(n_modes: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode thermal state with mean photon number `n_bar`.
    pub fn thermal(n_bar: f64) -> Result<Self> {
        check_range("n_bar", n_bar, 0.0, f64::MAX)?;
        Self::new(DMatrix::identity(2, 2) * (2.0 * n_bar + 1.0))
    }

    /// Two-mode standard form `[[a·I, c·σz], [c·σz, b·I]]`.
    pub fn standard_form(a: f64, b: f64, c: f64) -> Result<Self> {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            a, 0.0, c, 0.0,
            0.0, a, 0.0, -c,
            c, 0.0, b, 0.0,
            0.0, -c, 0.0, b,
        ]);
        Self::new(m)
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// 2×2 block between modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(invalid("mode", format!("{mode} out of range for {} modes", self.n_modes())));
        }
        Ok(())
    }

    /// Reduced state on `modes`, in the given order.
    pub fn submatrix(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx = quadrature_indices(modes);
        Ok(Self {
            entries: self.entries.select_rows(&idx).select_columns(&idx),
        })
    }

    /// Tensor product with another state; the other state's modes come last.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n1, n2) = (self.entries.nrows(), other.entries.nrows());
        let mut m = DMatrix::zeros(n1 + n2, n1 + n2);
        m.view_mut((0, 0), (n1, n1)).copy_from(&self.entries);
        m.view_mut((n1, n1), (n2, n2)).copy_from(&other.entries);
        Self { entries: m }
    }

    /// `S·V·Sᵀ` for a symplectic `S`.
    pub fn apply_symplectic(&self, s: &DMatrix<f64>) -> Result<Self> {
        Self::new(symmetrized(s * &self.entries * s.transpose()))
    }

    /// Applies a passive transfer matrix (see [`crate::optics`]) to `modes`.
    pub fn apply_passive(&self, modes: &[usize], transfer: &DMatrix<Complex64>) -> Result<Self> {
        if transfer.nrows() != modes.len() || transfer.ncols() != modes.len() {
            return Err(invalid("transfer", "size does not match the mode list"));
        }
        for &m in modes {
            self.check_mode(m)?;
        }
        let mut s = DMatrix::identity(self.entries.nrows(), self.entries.nrows());
        for (a, &i) in modes.iter().enumerate() {
            for (b, &j) in modes.iter().enumerate() {
                let w = transfer[(a, b)];
                s[(2 * i, 2 * j)] = w.re;
                s[(2 * i, 2 * j + 1)] = -w.im;
                s[(2 * i + 1, 2 * j)] = w.im;
                s[(2 * i + 1, 2 * j + 1)] = w.re;
            }
        }
        self.apply_symplectic(&s)
    }

    /// Phase rotation `a → e^{iφ} a` on one mode.
    pub fn rotate_mode(&self, mode: usize, phi: f64) -> Result<Self> {
        check_range("phi", phi, f64::MIN, f64::MAX)?;
        let w = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phi));
        self.apply_passive(&[mode], &w)
    }

    /// Thermal-loss channel of transmissivity `eta` and excess noise
    /// `epsilon` (referred to the channel input) on one mode.
    pub fn apply_thermal_loss(&self, mode: usize, eta: f64, epsilon: f64) -> Result<Self> {
        check_eta(eta)?;
        check_range("epsilon", epsilon, 0.0, f64::MAX)?;
        self.check_mode(mode)?;
        let g = eta.sqrt();
        let mut m = self.entries.clone();
        for r in 0..m.nrows() {
            for c in [2 * mode, 2 * mode + 1] {
                m[(r, c)] *= g;
                m[(c, r)] *= g;
            }
        }
        let noise = 1.0 - eta + eta * epsilon;
        m[(2 * mode, 2 * mode)] += noise;
        m[(2 * mode + 1, 2 * mode + 1)] += noise;
        Self::new(m)
    }

    /// Projects `modes` onto vacuum. Returns the state of the remaining modes
    /// and the projection probability `2^m / √det(V_m + I)`.
    pub fn condition_on_vacuum(&self, modes: &[usize]) -> Result<HeraldedCm> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let keep: Vec<usize> = (0..self.n_modes()).filter(|m| !modes.contains(m)).collect();
        if keep.is_empty() {
            return Err(invalid("modes", "cannot condition every mode"));
        }
        let (ki, mi) = (quadrature_indices(&keep), quadrature_indices(modes));
        let v_keep = self.entries.select_rows(&ki).select_columns(&ki);
        let v_meas = self.entries.select_rows(&mi).select_columns(&mi);
        let v_cross = self.entries.select_rows(&ki).select_columns(&mi);
        let shifted = v_meas + DMatrix::identity(mi.len(), mi.len());
        let det = shifted.determinant();
        let inv = shifted.try_inverse().ok_or(Error::Singular("vacuum conditioning"))?;
        let probability = 2f64.powi(modes.len() as i32) / det.sqrt();
        if !(probability >= MIN_HERALD_PROBABILITY) {
            return Err(Error::HeraldImpossible(probability));
        }
        let cm = Self::new(symmetrized(v_keep - &v_cross * inv * v_cross.transpose()))?;
        Ok(HeraldedCm { cm, probability })
    }
}

fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

pub(crate) fn check_eta(eta: f64) -> Result<f64> {
    if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
        return Err(invalid("eta", format!("{eta} is outside (0, 1]")));
    }
    Ok(eta)
}

/// Two-mode squeezed vacuum with squeezing `r`.
pub fn tmsv_cm(r: f64) -> Result<CovarianceMatrix> {
    check_range("r", r, 0.0, f64::MAX)?;
    let a = (2.0 * r).cosh();
    CovarianceMatrix::standard_form(a, a, (2.0 * r).sinh())
}

/// Thermal loss on mode 2 of a two-mode state.
pub fn thermal_loss_cm(cm: &CovarianceMatrix, eta: f64, epsilon: f64) -> Result<CovarianceMatrix> {
    if cm.n_modes() != 2 {
        return Err(invalid("cm", "expected a two-mode state"));
    }
    cm.apply_thermal_loss(1, eta, epsilon)
}

/// TMSV whose transmitted arm saw a phase `phi` and then thermal loss, in the
/// cos-only standard form: correlation `√η·sinh 2r·cos φ`.
pub fn phase_noise_cm(r: f64, eta: f64, epsilon: f64, phi: f64) -> Result<CovarianceMatrix> {
    check_range("r", r, 0.0, f64::MAX)?;
    check_eta(eta)?;
    check_range("epsilon", epsilon, 0.0, f64::MAX)?;
    check_range("phi", phi, f64::MIN, f64::MAX)?;
    let a = (2.0 * r).cosh();
    let b = eta * (a + (1.0 - eta) / eta + epsilon);
    let c = eta.sqrt() * (2.0 * r).sinh() * phi.cos();
    CovarianceMatrix::standard_form(a, b, c)
}

fn check_phases(phases: &[f64]) -> Result<()> {
    if phases.len() < 2 {
        return Err(invalid("phases", "unitary averaging needs at least two arms"));
    }
    for &p in phases {
        check_range("phases", p, f64::MIN, f64::MAX)?;
    }
    Ok(())
}

/// Exact heralded state of the averaging scheme: TMSV arm plus `n−1` vacuum
/// error arms, balanced encoding, per-arm phases, decoding, thermal loss on
/// every arm, then vacuum detection on the error arms.
pub fn ua_cm_exact(r: f64, eta: f64, epsilon: f64, phases: &[f64]) -> Result<HeraldedCm> {
    check_phases(phases)?;
    check_eta(eta)?;
    check_range("epsilon", epsilon, 0.0, f64::MAX)?;
    let n = phases.len();
    let transfer = optics::averaging_transfer(phases)?;
    let arms: Vec<usize> = (1..=n).collect();
    let mut cm = tmsv_cm(r)?
        .direct_sum(&CovarianceMatrix::identity(n - 1))
        .apply_passive(&arms, &transfer)?;
    for &m in &arms {
        cm = cm.apply_thermal_loss(m, eta, epsilon)?;
    }
    cm.condition_on_vacuum(&arms[1..])
}

/// Cos-only closed form of the averaged-arm state: with `Z` the mean phasor,
/// `A = cosh 2r·|Z|`, `B = η(A + (1−η)/η + ε)` and
/// `C = √η·sinh 2r·|Z|·cos(arctan(Im Z / Re Z))`.
///
/// The herald probability is taken from [`ua_cm_exact`]. The closed form is
/// not guaranteed to be physical for small `r`; such samples are rejected.
pub fn ua_cm_closed_form(r: f64, eta: f64, epsilon: f64, phases: &[f64]) -> Result<HeraldedCm> {
    check_phases(phases)?;
    check_range("r", r, 0.0, f64::MAX)?;
    let z = optics::mean_phasor(phases);
    let modulus = z.norm();
    if modulus < 1e-12 {
        return Err(Error::DegenerateHerald(modulus));
    }
    let a = (2.0 * r).cosh() * modulus;
    let b = eta * (a + (1.0 - eta) / eta + epsilon);
    // cos(arctan(y/x)) = |x|/|z|, which also covers x = 0.
    let c = eta.sqrt() * (2.0 * r).sinh() * modulus * (z.re.abs() / modulus);
    let cm = CovarianceMatrix::standard_form(a, b, c)?;
    let probability = ua_cm_exact(r, eta, epsilon, phases)?.probability;
    Ok(HeraldedCm { cm, probability })
}

/// Symplectic eigenvalues in descending order, clamped to be ≥ 1.
pub fn symplectic_eigenvalues(cm: &CovarianceMatrix) -> Vec<f64> {
    raw_symplectic_spectrum(cm.entries())
        .expect("validated covariance matrix")
        .into_iter()
        .map(|v| v.max(1.0))
        .collect()
}

/// State of the other modes after measuring `measured_mode`.
pub fn conditional_cm(cm: &CovarianceMatrix, measured_mode: usize, kind: MeasurementKind) -> Result<CovarianceMatrix> {
    cm.check_mode(measured_mode)?;
    let keep: Vec<usize> = (0..cm.n_modes()).filter(|&m| m != measured_mode).collect();
    if keep.is_empty() {
        return Err(invalid("measured_mode", "cannot measure the only mode"));
    }
    let ki = quadrature_indices(&keep);
    let mi = [2 * measured_mode, 2 * measured_mode + 1];
    let v = cm.entries();
    let v_keep = v.select_rows(&ki).select_columns(&ki);
    let v_cross = v.select_rows(&ki).select_columns(&mi);
    let v_meas = v.select_rows(&mi).select_columns(&mi);
    let gain = match kind {
        MeasurementKind::Heterodyne => (v_meas + DMatrix::identity(2, 2))
            .try_inverse()
            .ok_or(Error::Singular("heterodyne conditioning"))?,
        MeasurementKind::Homodyne(q) => {
            let k = if q == Quadrature::X { 0 } else { 1 };
            let var = v_meas[(k, k)];
            if !(var > 0.0) {
                return Err(Error::Singular("homodyne conditioning"));
            }
            let mut g = DMatrix::zeros(2, 2);
            g[(k, k)] = 1.0 / var;
            g
        }
    };
    CovarianceMatrix::new(symmetrized(v_keep - &v_cross * gain * v_cross.transpose()))
}
