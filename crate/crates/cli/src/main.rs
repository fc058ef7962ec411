//! `pclab`: command-line front end for piecewise contraction experiments.

mod commands;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pclab_core::error::Error;
use pclab_core::presets::{preset, SystemSpec};
use pclab_core::Backend;

use crate::emit::Format;

/// Exit status for a run that completed but broke an invariant.
const EXIT_VIOLATION: u8 = 3;
/// Exit status for bad input and every other error.
const EXIT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "pclab",
    version,
    about = "Piecewise contractions of the unit interval and their attractors"
)]
pub struct Cli {
    /// Arithmetic backend: `rational` (exact) or `float`. Defaults to
    /// rational for affine systems and float otherwise.
    #[arg(long, global = true)]
    pub backend: Option<Backend>,

    /// RNG seed for sampled quantities.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

/// Which map to work on.
#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Named system; see `pclab presets`.
    #[arg(long, conflicts_with = "system")]
    pub preset: Option<String>,

    /// JSON system description file.
    #[arg(long)]
    pub system: Option<PathBuf>,

    /// Comma-separated cuts `x_1,…,x_{n-1}`; overrides the system's own.
    #[arg(long, allow_hyphen_values = true)]
    pub cuts: Option<String>,

    /// Side each cut belongs to, e.g. `LR` or `left,right`.
    #[arg(long)]
    pub assign: Option<String>,
}

impl MapArgs {
    pub fn resolve(&self) -> Result<SystemSpec> {
        let mut spec = match (&self.preset, &self.system) {
            (Some(name), None) => preset(name)?,
            (None, Some(path)) => load_system(path)?,
            (None, None) => bail!("choose a system with --preset or --system"),
            (Some(_), Some(_)) => unreachable!("clap rejects both"),
        };
        if let Some(cuts) = &self.cuts {
            spec.cuts = Some(
                cuts.split(',')
                    .map(|c| c.trim().to_string())
                    .filter(|c| !c.is_empty())
                    .collect(),
            );
        }
        if let Some(assign) = &self.assign {
            spec.assignment = Some(assign.clone());
        }
        Ok(spec)
    }
}

pub fn load_system(path: &std::path::Path) -> Result<SystemSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SystemSpec::from_json(&text)?)
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the named systems.
    Presets,

    /// Check a JSON system description and print its images, gaps and constants.
    Validate { file: PathBuf },

    /// Forward orbit of `f` (or of `g` with `--inverse`).
    Orbit {
        #[command(flatten)]
        map: MapArgs,
        /// Initial point, e.g. `0.2` or `1/7`.
        #[arg(allow_hyphen_values = true)]
        x: String,
        /// Number of steps.
        steps: usize,
        /// Iterate the expanding left inverse `g` instead.
        #[arg(long)]
        inverse: bool,
    },

    /// Branch itinerary of a point with its eventual-periodicity verdict.
    Itinerary {
        #[command(flatten)]
        map: MapArgs,
        x: String,
        #[arg(long, default_value_t = 60)]
        steps: usize,
    },

    /// Backward trails of the cuts under `g` until they enter the gap set.
    Gaps {
        #[command(flatten)]
        map: MapArgs,
        /// Step budget per cut; defaults to a bound from the gap lengths.
        #[arg(long)]
        budget: Option<usize>,
    },

    /// Build and verify the quasi-partition with its transition maps.
    Qpartition {
        #[command(flatten)]
        map: MapArgs,
        /// Step budget per cut for the gap trails.
        #[arg(long)]
        budget: Option<usize>,
    },

    /// Periodic orbits and basin histogram over a grid of initial points.
    ///
    /// General-mode systems have no quasi-partition; for them every grid
    /// point is classified by direct iteration.
    Attractors {
        #[command(flatten)]
        map: MapArgs,
        /// Grid size: points `(k + 1/2) / samples`.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Step budget per cut for the gap trails.
        #[arg(long)]
        budget: Option<usize>,
        /// Per-point CSV (`x, orbit, iterations`).
        #[arg(long)]
        basins: Option<PathBuf>,
        /// Burn-in for direct iteration on general-mode systems.
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
    },

    /// Search for `g^k(x_i) = x_j` with `k <= k_max`.
    Gconnect {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 200)]
        k_max: usize,
    },

    /// Ulam approximation of the invariant density of `g`.
    Ulam {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1024)]
        bins: usize,
    },

    /// Largest gap left by `g`-orbits from seeded random points (float arithmetic).
    DensityGap {
        #[command(flatten)]
        map: MapArgs,
        /// Orbit length `M`.
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        /// Number of seeds, starting at `--seed` (default 0).
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Gap counted as dense.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
    },

    /// Run a sampling campaign from a TOML or JSON config file.
    Campaign {
        /// TOML or JSON campaign description.
        config: PathBuf,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Line-delimited JSON trial records.
        #[arg(long)]
        records: Option<PathBuf>,
        /// Summary JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// One CSV row per trial record (cuts, outcome, r, periods, q, m).
        #[arg(long)]
        flat: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvariantViolation(_)) => EXIT_VIOLATION,
        _ => EXIT_ERROR,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli).and_then(|report| {
        report.write(cli.format, cli.out.as_deref())?;
        Ok(report.violation)
    }) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(why)) => {
            eprintln!("invariant violation: {why}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
