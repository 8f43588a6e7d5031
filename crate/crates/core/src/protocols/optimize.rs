use super::spec::{ProtocolResult, ProtocolSpec};
use super::run_protocol;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_R_RANGE: (f64, f64) = (0.05, 1.2);
pub const DEFAULT_R_GRID_POINTS: usize = 12;

/// Log-spaced squeezing grid over [`DEFAULT_R_RANGE`].
pub fn default_r_grid() -> Vec<f64> {
    let (lo, hi) = DEFAULT_R_RANGE;
    let n = DEFAULT_R_GRID_POINTS;
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (ratio * i as f64).exp() })
        .collect()
}

/// Squeezing on `r_grid` that maximizes the raw key rate. Ties go to the
/// smaller `r`. Grid points whose state does not fit the Fock cutoff are
/// skipped; if every point fails, the first error is returned.
pub fn optimize_modulation(spec: &ProtocolSpec, distance_km: f64, r_grid: &[f64]) -> Result<(f64, ProtocolResult)> {
    if r_grid.is_empty() {
        return Err(invalid("r_grid", "empty grid"));
    }
    if r_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("r_grid", "grid must be strictly ascending"));
    }
    let mut results = Vec::new();
    let mut first_err: Option<Error> = None;
    for &r in r_grid {
        match run_protocol(&spec.with_r(r), distance_km) {
            Ok(res) => results.push(res),
            Err(e @ Error::InvalidParameter { .. }) => return Err(e),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let kappas: Vec<f64> = results.iter().map(|r| r.kappa).collect();
    match first_max(&kappas) {
        Some(i) => {
            let res = results.swap_remove(i);
            Ok((res.r, res))
        }
        None => Err(first_err.expect("non-empty grid")),
    }
}

/// Index of the first largest value.
fn first_max(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::Variant;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_shape() {
        let g = default_r_grid();
        assert_eq!(g.len(), 12);
        assert_abs_diff_eq!(g[0], 0.05, epsilon = 1e-15);
        assert_eq!(g[11], 1.2);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn refined_grid_does_not_improve_much() {
        let spec = ProtocolSpec::new(Variant::Baseline);
        let (_, coarse) = optimize_modulation(&spec, 50.0, &default_r_grid()).unwrap();
        let (lo, hi) = DEFAULT_R_RANGE;
        // Ten sub-steps per coarse step, so the coarse grid is a subset.
        let n = 10 * (DEFAULT_R_GRID_POINTS - 1) + 1;
        let fine: Vec<f64> = (0..n).map(|i| lo * ((hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect();
        let (_, refined) = optimize_modulation(&spec, 50.0, &fine).unwrap();
        assert!(refined.kappa >= coarse.kappa - 1e-12);
        assert!(coarse.kappa >= 0.99 * refined.kappa);
    }

    #[test]
    fn boundary_maximum() {
        // Strong phase noise washes out the correlations, so more
        // modulation only feeds the eavesdropper.
        let mut spec = ProtocolSpec::new(Variant::PhaseNoise).with_sigma(0.8);
        spec.mc_samples = 200;
        let grid = default_r_grid();
        let kappas: Vec<f64> = grid.iter().map(|&r| run_protocol(&spec.with_r(r), 50.0).unwrap().kappa).collect();
        assert!(kappas.windows(2).all(|w| w[1] < w[0]));
        let (r, _) = optimize_modulation(&spec, 50.0, &grid).unwrap();
        assert_eq!(r, grid[0]);
    }

    #[test]
    fn scaling_keeps_argmax() {
        let spec = ProtocolSpec::new(Variant::Baseline);
        let (r1, _) = optimize_modulation(&spec, 50.0, &default_r_grid()).unwrap();
        let mut sifted = spec.clone();
        sifted.sifting = true;
        let (r2, _) = optimize_modulation(&sifted, 50.0, &default_r_grid()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn ties_prefer_first() {
        assert_eq!(first_max(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(first_max(&[0.0, 0.0]), Some(0));
        assert_eq!(first_max(&[]), None);
    }

    #[test]
    fn leaky_grid_points_are_skipped() {
        let spec = ProtocolSpec::new(Variant::NlaRelay);
        let (r, _) = optimize_modulation(&spec, 100.0, &[0.1, 0.2, 1.2]).unwrap();
        assert!(r < 1.2);
        assert!(matches!(
            optimize_modulation(&spec, 100.0, &[1.2]),
            Err(Error::CutoffLeakage { .. })
        ));
    }

    #[test]
    fn rejects_bad_grids() {
        let spec = ProtocolSpec::new(Variant::Baseline);
        assert!(optimize_modulation(&spec, 10.0, &[]).is_err());
        assert!(optimize_modulation(&spec, 10.0, &[0.3, 0.2]).is_err());
    }
}
