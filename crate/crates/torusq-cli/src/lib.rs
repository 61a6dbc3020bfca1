//! Configuration-driven experiment runner over the `torusq` library: load or
//! preset a JSON config, compile and simulate the circuit pipeline across a
//! time grid, and write machine-readable artifacts.

pub mod config;
pub mod runner;

pub use config::{derive_seed, ConfigError, ExperimentConfig, ObservableSpec, PrepMode};
pub use runner::{
    default_grid_size, run_circuit, run_simulate, run_spectra, run_walsh, SimulateArtifacts,
};
