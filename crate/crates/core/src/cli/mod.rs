//! Command-line surface: `validate`, `scenario`, `enumerate` and `probe`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_enumerate, cmd_probe, cmd_scenario, cmd_validate, exit_code, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_THRESHOLD};
pub use config::RunConfig;

use crate::error::Result;
use crate::mesh::Point;

#[derive(Debug, Parser)]
#[command(name = "ertsens", version, about = "DC resistivity sensitivity modelling with thin liners and line electrodes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Homogeneous half-space validation against analytic sensitivities.
    Validate(RunArgs),
    /// Landfill liner scenario: global sensitivity, slices and probes.
    Scenario(RunArgs),
    /// List measurement configurations with their geometric factors.
    Enumerate(RunArgs),
    /// Sample a saved VTK field along a segment.
    Probe(ProbeArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Landfill case 1, 2 or 3.
    #[arg(long)]
    pub case: Option<u8>,
    /// Hole diameter in the liner bottom (m).
    #[arg(long)]
    pub hole: Option<f64>,
    /// Downward liner shift (m).
    #[arg(long)]
    pub shift: Option<f64>,
    /// Leave the liner membrane out.
    #[arg(long)]
    pub no_liner: bool,
    /// Geometric-factor cap (m).
    #[arg(long)]
    pub kmax: Option<f64>,
    /// Use every n-th enumerated configuration (1 for all).
    #[arg(long)]
    pub stride: Option<usize>,
    /// Validation mesh (MSH 4.1 ASCII).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record wall-clock timings in summary.json.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// VTK field file written by `validate` or `scenario`.
    pub field_file: PathBuf,
    #[arg(long, value_parser = commands::parse_point)]
    pub from: Point,
    #[arg(long, value_parser = commands::parse_point)]
    pub to: Point,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Cell scalar to sample.
    #[arg(long, default_value = "sensitivity")]
    pub field: String,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// Config file (if any) with the flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            case: self.case,
            hole: self.hole,
            shift: self.shift,
            no_liner: self.no_liner,
            kmax: self.kmax,
            stride: self.stride,
            mesh_file: self.mesh.clone(),
            out: self.out.clone(),
            threads: self.threads,
            timings: self.timings,
            ..Default::default()
        };
        Ok(base.merge(flags))
    }
}

fn init_threads(cfg: &RunConfig) {
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate(a) => a.resolve().and_then(|c| {
            init_threads(&c);
            cmd_validate(&c)
        }),
        Command::Scenario(a) => a.resolve().and_then(|c| {
            init_threads(&c);
            cmd_scenario(&c)
        }),
        Command::Enumerate(a) => a.resolve().and_then(|c| cmd_enumerate(&c)),
        Command::Probe(p) => cmd_probe(&p.field_file, &p.field, p.from, p.to, p.samples, p.out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
