use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use torusq_cli::{
    default_grid_size, run_circuit, run_simulate, run_spectra, run_walsh, ExperimentConfig,
    ObservableSpec, PrepMode,
};

/// Compile torus rotations into qubit circuits, simulate them, and
/// reconstruct classical observable trajectories from sampled measurements.
#[derive(Parser)]
#[command(name = "torusq-cli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a committed preset config (fig5_n3, fig5_n7, fig6_n8).
    #[arg(long)]
    preset: Option<String>,

    /// Override: qubit count.
    #[arg(long)]
    n: Option<u32>,
    /// Override: torus dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Override: index-decay exponent in (0, 1).
    #[arg(long)]
    p: Option<f64>,
    /// Override: kernel decay rate.
    #[arg(long)]
    tau: Option<f64>,
    /// Override: rotation frequencies (repeat per dimension).
    #[arg(long = "alpha", num_args = 1.., value_name = "ALPHA")]
    alphas: Option<Vec<f64>>,
    /// Override: initial point angles (repeat per dimension).
    #[arg(long = "x", num_args = 1.., value_name = "ANGLE")]
    initial_point: Option<Vec<f64>>,
    /// Override: observable preset name or inline JSON coefficient list.
    #[arg(long)]
    observable: Option<String>,
    /// Override: first measurement time.
    #[arg(long)]
    t_start: Option<f64>,
    /// Override: last measurement time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Override: time-grid spacing.
    #[arg(long)]
    t_step: Option<f64>,
    /// Override: shots per time point.
    #[arg(long)]
    shots: Option<u64>,
    /// Override: run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override: state preparation (exact|efficient).
    #[arg(long)]
    prep_mode: Option<PrepMode>,
    /// Override: artifact output directory.
    #[arg(long)]
    output_dir: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                ExperimentConfig::from_json(&text)?
            }
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => bail!("pass --config FILE or --preset NAME"),
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        };
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.d {
            cfg.d = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = &self.alphas {
            cfg.alphas = v.clone();
        }
        if let Some(v) = &self.initial_point {
            cfg.initial_point = v.clone();
        }
        if let Some(v) = &self.observable {
            cfg.observable = match serde_json::from_str(v) {
                Ok(coeffs) => ObservableSpec::Coeffs(coeffs),
                Err(_) => ObservableSpec::Preset(v.clone()),
            };
        }
        if let Some(v) = self.t_start {
            cfg.t_start = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.t_step {
            cfg.t_step = v;
        }
        if let Some(v) = self.shots {
            cfg.shots = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.prep_mode {
            cfg.prep_mode = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the circuit pipeline over the time grid and write histogram,
    /// estimation, and metadata artifacts.
    Simulate(ConfigArgs),
    /// Eigendecompose the observable's matrix representation and write
    /// spectrum JSON.
    Spectra {
        #[command(flatten)]
        config: ConfigArgs,
        /// Per-dimension grid resolution for eigenfunction sampling.
        #[arg(long)]
        grid_size: Option<usize>,
    },
    /// Print the evolution stage's closed-form phase coefficients as JSON.
    Walsh(ConfigArgs),
    /// Print the compiled pipeline gate list as JSON.
    Circuit(ConfigArgs),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let arts = run_simulate(&cfg)?;
            println!("wrote {}", arts.histogram_csv.display());
            println!("wrote {}", arts.estimation_csv.display());
            println!("wrote {}", arts.metadata_json.display());
            println!("rms_error {}", arts.rms_error);
        }
        Command::Spectra { config, grid_size } => {
            let cfg = config.resolve()?;
            let gs = grid_size.unwrap_or_else(|| default_grid_size(cfg.d));
            let path = run_spectra(&cfg, gs)?;
            println!("wrote {}", path.display());
        }
        Command::Walsh(args) => {
            let cfg = args.resolve()?;
            println!("{}", run_walsh(&cfg)?);
        }
        Command::Circuit(args) => {
            let cfg = args.resolve()?;
            println!("{}", run_circuit(&cfg)?);
        }
    }
    Ok(())
}
