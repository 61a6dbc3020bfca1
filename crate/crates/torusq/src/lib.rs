//! Compile ergodic torus rotations into qubit circuits and recover classical
//! observable trajectories from simulated projective measurements.
//!
//! The crate is organized as a pipeline:
//!
//! * [`classical`] — rotations on the d-torus, their Koopman evolution, and
//!   trigonometric-polynomial observables;
//! * [`rkha`] — the reproducing-kernel function space whose coefficients
//!   become register amplitudes, with the truncated index set and its
//!   register ordering;
//! * [`opalg`] — dense matrix representations: multiplication operators,
//!   occupation-kernel density matrices, spectra, and expectation evolution
//!   used as ground truth for the gate path;
//! * [`walsh`] — Walsh analysis on register bitstrings and the closed-form
//!   phase coefficients that make the evolution stage one Rz gate per qubit;
//! * [`circuit`] — the gate set, circuit builders for the three pipeline
//!   stages, and a statevector simulator;
//! * [`measure`] — seeded measurement sampling, grid decoding, and
//!   observable estimators.
//!
//! With the default `parallel` feature, amplitude updates and shot sampling
//! fan out via rayon; results are bitwise identical to the sequential
//! fallback (`--no-default-features`).

pub mod circuit;
pub mod classical;
pub mod measure;
pub mod opalg;
pub mod rkha;
pub mod walsh;
