use super::config::SweepConfig;
use super::run::{evaluate_point, SweepRow};
use crate::error::{invalid, Error, Result};

/// Default bisection tolerance in km.
pub const CROSSING_TOLERANCE_KM: f64 = 1.0;

/// Bisects for the sign change of `f` between `lo` (positive) and `hi`
/// (non-positive) down to `tol` and returns the midpoint of the final
/// bracket.
pub fn bisect_sign_change<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) || !(lo < hi) {
        return Err(invalid("bracket", format!("[{lo}, {hi}] with tolerance {tol}")));
    }
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(f_lo > 0.0 && f_hi <= 0.0) {
        return Err(Error::NoCrossing { start: lo, end: hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First pair of adjacent successful rows where the raw rate goes from
/// positive to non-positive.
pub fn crossing_bracket(rows: &[SweepRow]) -> Option<(f64, f64)> {
    rows.windows(2)
        .find(|w| w[0].is_ok() && w[1].is_ok() && w[0].kappa_raw > 0.0 && w[1].kappa_raw <= 0.0)
        .map(|w| (w[0].distance_km, w[1].distance_km))
}

/// Distance where the raw key rate first drops to zero, bracketed by the
/// sweep rows and refined by live evaluation to [`CROSSING_TOLERANCE_KM`].
pub fn find_zero_crossing(config: &SweepConfig, rows: &[SweepRow]) -> Result<f64> {
    let (lo, hi) = crossing_bracket(rows).ok_or(Error::NoCrossing {
        start: config.distance_start_km,
        end: config.distance_end_km,
    })?;
    bisect_sign_change(|d| evaluate_point(config, d).map(|r| r.kappa), lo, hi, CROSSING_TOLERANCE_KM)
}
