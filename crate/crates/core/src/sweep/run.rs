use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use crate::error::{Error, Result};
use crate::keyrate::transmissivity_from_distance;
use crate::protocols::{optimize_modulation, run_protocol, ProtocolResult};

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub distance_km: f64,
    pub eta: f64,
    pub kappa_raw: f64,
    pub kappa_clamped: f64,
    pub i_ab: f64,
    pub chi_be: f64,
    pub p_success: f64,
    pub p_ua: f64,
    pub p_qs: f64,
    pub plob: f64,
    pub mc_stderr: f64,
    pub best_r: f64,
    pub leakage: f64,
    /// Failure message; the numeric columns are NaN when set.
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(res: &ProtocolResult) -> Self {
        Self {
            distance_km: res.distance_km,
            eta: res.eta,
            kappa_raw: res.kappa,
            kappa_clamped: res.kappa_clamped,
            i_ab: res.i_ab,
            chi_be: res.chi_be,
            p_success: res.p_success,
            p_ua: res.p_ua,
            p_qs: res.p_qs,
            plob: res.plob,
            mc_stderr: res.diagnostics.mc_stderr,
            best_r: res.r,
            leakage: res.diagnostics.leakage,
            error: None,
        }
    }

    fn failed(distance_km: f64, loss_db_per_km: f64, err: &Error) -> Self {
        let nan = f64::NAN;
        Self {
            distance_km,
            eta: transmissivity_from_distance(distance_km, loss_db_per_km).unwrap_or(nan),
            kappa_raw: nan,
            kappa_clamped: nan,
            i_ab: nan,
            chi_be: nan,
            p_success: nan,
            p_ua: nan,
            p_qs: nan,
            plob: nan,
            mc_stderr: nan,
            best_r: nan,
            leakage: nan,
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Resolved configuration and one row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResultFile {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

/// Key rate at one distance, optimizing r when the config asks for it.
pub fn evaluate_point(config: &SweepConfig, distance_km: f64) -> Result<ProtocolResult> {
    match &config.r_grid {
        Some(grid) => optimize_modulation(&config.spec, distance_km, grid).map(|(_, res)| res),
        None => run_protocol(&config.spec, distance_km),
    }
}

/// Evaluates every grid point on a pool of `config.workers` threads. Rows
/// come back in grid order and each point reduces its samples in a fixed
/// order, so the worker count does not change the numbers.
pub fn run_sweep(config: &SweepConfig) -> SweepResultFile {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool");
    let rows = pool.install(|| {
        config
            .distances()
            .into_par_iter()
            .map(|d| match evaluate_point(config, d) {
                Ok(res) => SweepRow::from_result(&res),
                Err(e) => SweepRow::failed(d, config.spec.loss_db_per_km, &e),
            })
            .collect()
    });
    SweepResultFile {
        config: config.clone(),
        rows,
    }
}
