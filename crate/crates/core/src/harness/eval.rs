use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{AnyDecoder, Decoder};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LogicalClass, PauliFrame, Syndrome};
use crate::noise::trial_error;

/// Two-sided 99.9% standard normal quantile.
pub const WILSON_Z: f64 = 3.2905;

/// Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    (
        (center - half).max(0.0).min(phat),
        (center + half).min(1.0).max(phat),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub decoder: String,
    pub d: usize,
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Test hook: corrects with the sampled error itself, so it never fails.
pub struct OracleDecoder;

impl Decoder for OracleDecoder {
    fn decode(&self, s: &Syndrome) -> PauliFrame {
        panic!(
            "the oracle needs the sampled error, got only a syndrome of {} bits",
            s.len()
        )
    }

    fn decode_trial(&self, _s: &Syndrome, error: &PauliFrame) -> PauliFrame {
        error.clone()
    }
}

fn trial_fails(dec: &dyn Decoder, lat: &Lattice, p: f64, seed: u64, trial: u64) -> Result<bool> {
    let error = trial_error(lat, p, seed, trial)?;
    let syndrome = lat.syndrome_of(&error)?;
    let mut residual = dec.decode_trial(&syndrome, &error);
    residual ^= &error;
    Ok(lat.residual_class(&residual)? != LogicalClass::I)
}

/// Runs `trials` single-round trials; trial `i` draws its error from stream `i`
/// of `seed`, so the count does not depend on `workers`.
pub fn evaluate(
    name: &str,
    dec: &dyn Decoder,
    lat: &Lattice,
    p: f64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<EvalResult> {
    if trials == 0 {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let failures = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| trial_fails(dec, lat, p, seed, i).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?;
    let (ci_low, ci_high) = wilson_interval(failures, trials, WILSON_Z);
    Ok(EvalResult {
        decoder: name.to_string(),
        d: lat.d(),
        p,
        trials,
        failures,
        ler: failures as f64 / trials as f64,
        ci_low,
        ci_high,
        seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates every decoder at every `p` with the same seed and writes one CSV
/// row per pair.
pub fn sweep(
    decoders: &[AnyDecoder],
    lat: &Lattice,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
    workers: usize,
    out: &Path,
) -> Result<Vec<EvalResult>> {
    let mut writer = csv::Writer::from_path(out)?;
    let mut rows = Vec::with_capacity(decoders.len() * p_grid.len());
    for dec in decoders {
        for &p in p_grid {
            let r = evaluate(dec.kind().as_str(), dec, lat, p, trials, seed, workers)?;
            writer.serialize(&r)?;
            rows.push(r);
        }
    }
    writer.flush()?;
    Ok(rows)
}
