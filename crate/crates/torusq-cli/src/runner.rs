//! Experiment execution: drives the circuit pipeline over the time grid and
//! writes the result artifacts (histogram and estimation CSVs, metadata
//! JSON, spectrum JSON, inspection dumps).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use torusq::circuit::{pipeline, simulate};
use torusq::classical::koopman_evolve;
use torusq::measure::{estimate, sample, Histogram};
use torusq::opalg::{eigenfunction_grid, hermitian_spectrum, selfadjoint_operator};
use torusq::walsh::hamiltonian_walsh_coeffs;

use crate::config::{derive_seed, ExperimentConfig, PrepMode};

/// Paths of everything a simulate run wrote, plus the headline error.
#[derive(Debug, Clone)]
pub struct SimulateArtifacts {
    pub histogram_csv: PathBuf,
    pub estimation_csv: PathBuf,
    pub metadata_json: PathBuf,
    /// Root-mean-square deviation of the estimates from the classical truth
    /// over the time grid.
    pub rms_error: f64,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    config: &'a ExperimentConfig,
    rng: &'static str,
    package: &'static str,
    version: &'static str,
    timestamp_unix_seconds: u64,
}

struct TimePointResult {
    t: f64,
    histogram: Histogram,
    estimate: Complex64,
    truth: Complex64,
}

/// Run the full pipeline over the time grid; write histogram time-series
/// CSV, estimation CSV with the classical truth column, and run metadata.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateArtifacts> {
    cfg.validate()?;
    let grid = cfg.time_grid();
    let params = cfg.params()?;
    let freqs = cfg.frequencies()?;
    let x = cfg.point();
    let f = cfg.resolve_observable()?;

    let run_one = |(i, &t): (usize, &f64)| -> Result<TimePointResult> {
        let circuit = pipeline(
            &x,
            t,
            cfg.n,
            &params,
            &freqs,
            cfg.prep_mode == PrepMode::Efficient,
        )?;
        let state = simulate(&circuit, None)?;
        let histogram = sample(&state, cfg.shots, derive_seed(cfg.seed, i as u64))?;
        let est = estimate(&histogram, std::slice::from_ref(&f), cfg.d)?[0];
        // The reference trajectory comes from the classical flow alone.
        let truth = koopman_evolve(&f, &x, t, &freqs);
        Ok(TimePointResult {
            t,
            histogram,
            estimate: est,
            truth,
        })
    };

    #[cfg(feature = "parallel")]
    let results: Vec<TimePointResult> = grid
        .par_iter()
        .enumerate()
        .map(run_one)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let results: Vec<TimePointResult> = grid.iter().enumerate().map(run_one).collect::<Result<_>>()?;

    let dir = Path::new(&cfg.output_dir);
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;

    let mut hist_csv = String::from("t,bitstring,integer_index,count\n");
    for r in &results {
        for (b, c) in r.histogram.entries() {
            writeln!(hist_csv, "{},{},{},{}", r.t, b, b.value(), c).unwrap();
        }
    }
    let histogram_csv = dir.join("histograms.csv");
    fs::write(&histogram_csv, hist_csv).context("writing histogram CSV")?;

    let mut est_csv = String::from("t,estimate_re,estimate_im,truth_re,truth_im,abs_error\n");
    let mut sq_sum = 0.0;
    for r in &results {
        let err = (r.estimate - r.truth).norm();
        sq_sum += err * err;
        writeln!(
            est_csv,
            "{},{},{},{},{},{}",
            r.t, r.estimate.re, r.estimate.im, r.truth.re, r.truth.im, err
        )
        .unwrap();
    }
    let estimation_csv = dir.join("estimation.csv");
    fs::write(&estimation_csv, est_csv).context("writing estimation CSV")?;

    let metadata = RunMetadata {
        config: cfg,
        rng: "chacha8",
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix_seconds: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let metadata_json = dir.join("metadata.json");
    fs::write(
        &metadata_json,
        serde_json::to_string_pretty(&metadata).context("serializing metadata")? + "\n",
    )
    .context("writing metadata JSON")?;

    Ok(SimulateArtifacts {
        histogram_csv,
        estimation_csv,
        metadata_json,
        rms_error: (sq_sum / results.len() as f64).sqrt(),
    })
}

#[derive(Serialize)]
struct SpectrumJson {
    eigenvalues: Vec<f64>,
    eigenvector_grids: Vec<Vec<f64>>,
}

/// Default per-dimension sample count keeps the exported grids to a few
/// hundred kilobytes regardless of torus dimension.
pub fn default_grid_size(d: usize) -> usize {
    if d == 1 {
        512
    } else {
        32
    }
}

/// Eigendecompose the observable's Hermitian matrix representation and
/// write eigenvalues plus gridded eigenfunction moduli as JSON.
pub fn run_spectra(cfg: &ExperimentConfig, grid_size: usize) -> Result<PathBuf> {
    cfg.validate()?;
    let params = cfg.params()?;
    let f = cfg.resolve_observable()?;
    let op = selfadjoint_operator(&f, cfg.n, &params, false)?;
    let spec = hermitian_spectrum(&op)?;
    let eigenvector_grids = (0..spec.len())
        .map(|k| eigenfunction_grid(&spec, k, grid_size, &params))
        .collect::<Result<Vec<_>, _>>()?;
    let out = SpectrumJson {
        eigenvalues: spec.eigenvalues().to_vec(),
        eigenvector_grids,
    };
    let dir = Path::new(&cfg.output_dir);
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join("spectrum.json");
    fs::write(&path, serde_json::to_string(&out)? + "\n").context("writing spectrum JSON")?;
    Ok(path)
}

#[derive(Serialize)]
struct WalshJson {
    n: u32,
    d: usize,
    alphas: Vec<f64>,
    coeffs: BTreeMap<u64, f64>,
}

/// The evolution stage's closed-form phase coefficients as JSON text.
pub fn run_walsh(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let coeffs = hamiltonian_walsh_coeffs(cfg.n, cfg.d, &cfg.frequencies()?)?;
    let out = WalshJson {
        n: cfg.n,
        d: cfg.d,
        alphas: cfg.alphas.clone(),
        coeffs: coeffs.entries().collect(),
    };
    Ok(serde_json::to_string_pretty(&out)?)
}

#[derive(Serialize)]
struct CircuitJson {
    n: u32,
    t: f64,
    prep_mode: PrepMode,
    gates: Vec<torusq::circuit::GateDumpEntry>,
}

/// Compile the pipeline at the first grid time and dump its gate list as
/// JSON text.
pub fn run_circuit(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let params = cfg.params()?;
    let freqs = cfg.frequencies()?;
    let t = cfg.t_start;
    let circuit = pipeline(
        &cfg.point(),
        t,
        cfg.n,
        &params,
        &freqs,
        cfg.prep_mode == PrepMode::Efficient,
    )?;
    let out = CircuitJson {
        n: cfg.n,
        t,
        prep_mode: cfg.prep_mode,
        gates: circuit.dump_entries(),
    };
    Ok(serde_json::to_string_pretty(&out)?)
}
