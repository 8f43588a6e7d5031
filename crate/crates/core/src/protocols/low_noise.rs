//! Small-phase-variance approximations of the averaged arm, and the
//! Monte-Carlo statistics they approximate.

use super::spec::PhaseNoiseModel;
use crate::error::{check_range, invalid, Result};
use crate::optics::mean_phasor;

/// Leading-order means for phase variance `v` over `n` averaged copies:
/// `(⟨|Z|⟩·tanh r, ⟨cos arg Z⟩) ≈ ((1 − (v/2 − v/2n))·tanh r, cos √(v/n))`.
pub fn ua_low_noise_approx(r: f64, v: f64, n: usize) -> Result<(f64, f64)> {
    check_range("r", r, 0.0, f64::MAX)?;
    check_range("v", v, 0.0, f64::MAX)?;
    if n == 0 {
        return Err(invalid("n", "at least one copy"));
    }
    let n = n as f64;
    Ok(((1.0 - (v / 2.0 - v / (2.0 * n))) * r.tanh(), (v / n).sqrt().cos()))
}

/// Sample means and standard errors of the mean-phasor modulus and of the
/// cosine of its argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseStatistics {
    pub mean_modulus: f64,
    pub stderr_modulus: f64,
    pub mean_cos: f64,
    pub stderr_cos: f64,
    pub samples: usize,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Draws `samples` sets of `n` phases from the same streams the protocols
/// use and summarizes the mean phasor `Z`.
pub fn phase_statistics(model: PhaseNoiseModel, n: usize, samples: usize) -> Result<PhaseStatistics> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    if n == 0 {
        return Err(invalid("n", "at least one copy"));
    }
    let (mut moduli, mut cosines) = (Vec::with_capacity(samples), Vec::with_capacity(samples));
    for i in 0..samples as u64 {
        let z = mean_phasor(&model.sample(i, n));
        moduli.push(z.norm());
        cosines.push(if z.norm() > 0.0 { z.re / z.norm() } else { 1.0 });
    }
    let (mean_modulus, stderr_modulus) = mean_and_stderr(&moduli);
    let (mean_cos, stderr_cos) = mean_and_stderr(&cosines);
    Ok(PhaseStatistics {
        mean_modulus,
        stderr_modulus,
        mean_cos,
        stderr_cos,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noiseless_limit() {
        let (t, c) = ua_low_noise_approx(0.7, 0.0, 2).unwrap();
        assert_eq!(t, 0.7f64.tanh());
        assert_eq!(c, 1.0);
    }

    #[test]
    fn direct_evaluation() {
        let (t, _) = ua_low_noise_approx(0.5, 0.01, 2).unwrap();
        assert_abs_diff_eq!(t, 0.9975 * 0.5f64.tanh(), epsilon = 1e-15);
    }

    #[test]
    fn monte_carlo_agrees_in_the_small_noise_regime() {
        let model = PhaseNoiseModel { sigma: 0.1, seed: 3 };
        let stats = phase_statistics(model, 2, 4000).unwrap();
        let (t, c) = ua_low_noise_approx(1.0, 0.01, 2).unwrap();
        let t = t / 1.0f64.tanh();
        assert!((stats.mean_modulus - t).abs() < 3.0 * stats.stderr_modulus);
        assert!((stats.mean_cos - c).abs() < 3.0 * stats.stderr_cos);
    }
}
