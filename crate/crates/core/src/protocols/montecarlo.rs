use nalgebra::DMatrix;
use rayon::prelude::*;

use super::spec::ProtocolSpec;
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::keyrate::{holevo_bound, mutual_information, secret_key_rate};

/// Batches used for the batch-means standard error.
pub const STDERR_BATCHES: usize = 10;

/// One heralded phase-noise realization.
#[derive(Debug, Clone)]
pub(crate) struct Sample {
    pub cm: DMatrix<f64>,
    /// Overall herald probability of this realization.
    pub probability: f64,
    /// Averaging-herald part of `probability`.
    pub ua_probability: f64,
    pub leakage: f64,
    pub pruned_weight: f64,
}

impl Sample {
    pub fn certain(cm: CovarianceMatrix) -> Self {
        Self {
            cm: cm.into_entries(),
            probability: 1.0,
            ua_probability: 1.0,
            leakage: 0.0,
            pruned_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Aggregate {
    pub cm: CovarianceMatrix,
    pub p_success: f64,
    pub p_ua: f64,
    pub leakage: f64,
    pub pruned_weight: f64,
    pub stderr: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Mutual information, Holevo bound and raw key rate of a state.
pub(crate) fn rate(spec: &ProtocolSpec, cm: &CovarianceMatrix, p_success: f64) -> Result<(f64, f64, f64)> {
    let i_ab = mutual_information(cm, spec.alice_kind, spec.bob_kind)?;
    let chi_be = holevo_bound(cm, spec.bob_kind)?;
    let kappa = spec.sifting_factor() * secret_key_rate(i_ab, chi_be, spec.beta, p_success)?.raw;
    Ok((i_ab, chi_be, kappa))
}

fn skippable(e: &Error) -> bool {
    matches!(e, Error::DegenerateHerald(_) | Error::HeraldImpossible(_) | Error::Unphysical(_))
}

/// Probability-weighted CM and mean probability over a run of samples.
/// `n` counts skipped samples too.
fn combine(samples: &[Option<Sample>]) -> Option<(CovarianceMatrix, f64)> {
    let mut weight = 0.0;
    let mut acc: Option<DMatrix<f64>> = None;
    for s in samples.iter().flatten() {
        weight += s.probability;
        let term = &s.cm * s.probability;
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    if !(weight > 0.0) {
        return None;
    }
    let cm = CovarianceMatrix::new(acc? / weight).ok()?;
    Some((cm, weight / samples.len() as f64))
}

/// Evaluates `sample(i)` for every sample index of `spec` and aggregates.
/// Samples run in parallel but are reduced in index order, so the result
/// does not depend on the thread count.
pub(crate) fn run<F>(spec: &ProtocolSpec, sample: F) -> Result<Aggregate>
where
    F: Fn(u64) -> Result<Sample> + Sync,
{
    let n = spec.effective_samples();
    let results: Vec<Result<Sample>> = (0..n as u64).into_par_iter().map(&sample).collect();
    let mut samples = Vec::with_capacity(n);
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(s) => samples.push(Some(s)),
            Err(e) if skippable(&e) => {
                skipped += 1;
                samples.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let (cm, p_success) = combine(&samples).ok_or(Error::HeraldImpossible(0.0))?;
    let ok = samples.iter().flatten();
    let weight: f64 = ok.clone().map(|s| s.probability).sum();
    let leakage = ok.clone().map(|s| s.probability * s.leakage).sum::<f64>() / weight;
    let pruned_weight = ok.clone().map(|s| s.probability * s.pruned_weight).sum::<f64>() / weight;
    let p_ua = ok.map(|s| s.ua_probability).sum::<f64>() / n as f64;
    let stderr = batch_stderr(spec, &samples);
    Ok(Aggregate {
        cm,
        p_success,
        p_ua,
        leakage,
        pruned_weight,
        stderr,
        samples: n,
        skipped,
    })
}

/// Standard error of the key rate from the spread of per-batch rates.
fn batch_stderr(spec: &ProtocolSpec, samples: &[Option<Sample>]) -> f64 {
    let n = samples.len();
    if n < 2 * STDERR_BATCHES {
        return 0.0;
    }
    let size = n / STDERR_BATCHES;
    let kappas: Vec<f64> = (0..STDERR_BATCHES)
        .filter_map(|b| {
            let end = if b + 1 == STDERR_BATCHES { n } else { (b + 1) * size };
            let (cm, p) = combine(&samples[b * size..end])?;
            rate(spec, &cm, p).ok().map(|r| r.2)
        })
        .collect();
    if kappas.len() < 2 {
        return 0.0;
    }
    let k = kappas.len() as f64;
    let mean = kappas.iter().sum::<f64>() / k;
    let var = kappas.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}
