//! Projective measurement of register states and reconstruction of classical
//! observable values from the sampled outcome frequencies.
//!
//! Measured register values decode to uniform grid points on the torus:
//! each dimension block, read most-significant-bit first, scales to an angle
//! `2 pi v / 2^(n/d)`. Estimators average observable values over those grid
//! points weighted by outcome counts.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::circuit::StateVector;
use crate::classical::{Observable, TorusPoint};
use crate::walsh::{BitString, WalshError};

/// Shots are drawn in fixed-size shards, each from its own counter-mode RNG
/// stream, so the outcome counts are independent of thread count.
pub const SHARD_SIZE: u64 = 65536;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("sample size must be positive")]
    ZeroShots,
    #[error("register width {n} is not divisible by torus dimension {d}")]
    WidthNotDivisible { n: u32, d: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Bits(#[from] WalshError),
}

/// Outcome counts from repeated measurement of one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    n: u32,
    shots: u64,
    counts: BTreeMap<BitString, u64>,
}

impl Histogram {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn count(&self, b: &BitString) -> u64 {
        self.counts.get(b).copied().unwrap_or(0)
    }

    /// Observed outcomes in increasing register order.
    pub fn entries(&self) -> impl Iterator<Item = (&BitString, &u64)> {
        self.counts.iter()
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// Empirical outcome frequencies, indexed by register value.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n];
        for (b, &c) in &self.counts {
            out[b.value() as usize] = c as f64 / self.shots as f64;
        }
        out
    }
}

/// Measurement probabilities of each register outcome.
pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

fn draw_shard(cdf: &[f64], shots: u64, seed: u64, stream: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[idx] += 1;
    }
    counts
}

fn sample_impl(
    state: &StateVector,
    shots: u64,
    seed: u64,
    parallel: bool,
) -> Result<Histogram, MeasureError> {
    if shots == 0 {
        return Err(MeasureError::ZeroShots);
    }
    let probs = probabilities(state);
    let mut acc = 0.0;
    let cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();

    let num_shards = shots.div_ceil(SHARD_SIZE);
    let shard_shots =
        |s: u64| -> u64 { (shots - s * SHARD_SIZE).min(SHARD_SIZE) };

    #[cfg(feature = "parallel")]
    let per_shard: Vec<Vec<u64>> = if parallel {
        (0..num_shards)
            .into_par_iter()
            .map(|s| draw_shard(&cdf, shard_shots(s), seed, s))
            .collect()
    } else {
        (0..num_shards)
            .map(|s| draw_shard(&cdf, shard_shots(s), seed, s))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_shard: Vec<Vec<u64>> = {
        let _ = parallel;
        (0..num_shards)
            .map(|s| draw_shard(&cdf, shard_shots(s), seed, s))
            .collect()
    };

    // Shard merge stays sequential and in shard order.
    let mut totals = vec![0u64; cdf.len()];
    for shard in &per_shard {
        for (t, c) in totals.iter_mut().zip(shard) {
            *t += c;
        }
    }
    let n = state.n();
    let counts = totals
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(b, c)| (BitString::from_value(b as u64, n).unwrap(), c))
        .collect();
    Ok(Histogram { n, shots, counts })
}

/// Draw `shots` register measurements of the state. The same `(state, shots,
/// seed)` triple always produces the same histogram, with or without the
/// `parallel` feature.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> Result<Histogram, MeasureError> {
    sample_impl(state, shots, seed, cfg!(feature = "parallel"))
}

/// Single-threaded sampling; the benchmark baseline.
pub fn sample_sequential(
    state: &StateVector,
    shots: u64,
    seed: u64,
) -> Result<Histogram, MeasureError> {
    sample_impl(state, shots, seed, false)
}

/// Map a measured register value to its torus grid point: dimension block
/// `i`, read most-significant-bit first as an integer `v`, gives angle
/// `2 pi v / 2^(n/d)`.
pub fn decode_gridpoint(b: &BitString, d: usize) -> Result<TorusPoint, MeasureError> {
    let n = b.n();
    if d == 0 || n as usize % d != 0 {
        return Err(MeasureError::WidthNotDivisible { n, d });
    }
    let w = n / d as u32;
    let cell = 1u64 << w;
    let angles = (0..d)
        .map(|i| {
            let shift = w * (d - 1 - i) as u32;
            let v = (b.value() >> shift) & (cell - 1);
            std::f64::consts::TAU * v as f64 / cell as f64
        })
        .collect();
    Ok(TorusPoint::new(angles))
}

fn check_observables(
    n: u32,
    d: usize,
    observables: &[Observable],
) -> Result<(), MeasureError> {
    if d == 0 || n as usize % d != 0 {
        return Err(MeasureError::WidthNotDivisible { n, d });
    }
    for f in observables {
        if f.d() != d {
            return Err(MeasureError::DimensionMismatch(format!(
                "observable dimension {} vs torus dimension {d}",
                f.d()
            )));
        }
    }
    Ok(())
}

/// Monte Carlo estimates `(1/K) sum_b count_b f(x_b)` for several
/// observables over one histogram, decoding each observed grid point once.
pub fn estimate(
    hist: &Histogram,
    observables: &[Observable],
    d: usize,
) -> Result<Vec<Complex64>, MeasureError> {
    check_observables(hist.n(), d, observables)?;
    let mut sums = vec![Complex64::new(0.0, 0.0); observables.len()];
    for (b, &c) in hist.entries() {
        let x = decode_gridpoint(b, d)?;
        let weight = c as f64;
        for (s, f) in sums.iter_mut().zip(observables) {
            *s += weight * f.evaluate(&x);
        }
    }
    let k = hist.shots() as f64;
    Ok(sums.into_iter().map(|s| s / k).collect())
}

/// The infinite-shot limit of [`estimate`]: the probability-weighted grid
/// average `sum_b p_b f(x_b)`.
pub fn exact_expectation(
    state: &StateVector,
    f: &Observable,
    d: usize,
) -> Result<Complex64, MeasureError> {
    check_observables(state.n(), d, std::slice::from_ref(f))?;
    let n = state.n();
    let mut sum = Complex64::new(0.0, 0.0);
    for (b, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            let x = decode_gridpoint(&BitString::from_value(b as u64, n).unwrap(), d)?;
            sum += p * f.evaluate(&x);
        }
    }
    Ok(sum)
}
