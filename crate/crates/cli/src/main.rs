//! Reproducible experiment runner: every subcommand reads a flat key-value
//! config (all keys overridable by flags), runs seeded and deterministic,
//! and writes CSV/JSON outputs stamped with the config hash. The run record
//! (including wall time) goes to stdout, never into the output files.
//!
//! Exit codes: 0 on success (mathematical failures are data), 2 on
//! input/config errors, 1 on internal errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ArithMode, DimSource, Domain, ExperimentConfig, PartialConfig, SeqKind, OUT_ENV_VAR};
use output::OutputWriter;
use sievedim::dynamics::MapKind;

#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration: exit code 2.
    Input(String),
    /// Unexpected internal failure: exit code 1.
    Internal(anyhow::Error),
}

#[derive(Parser, Debug)]
#[command(
    name = "sievedim",
    version,
    about = "Cantor families, sieving dynamics, and dimension estimation",
    after_help = "The SIEVEDIM_OUT environment variable overrides the output directory \
                  (flags override the environment)."
)]
struct Cli {
    /// Flat key-value config file (TOML); flags override its keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Every config key as an optional flag of the same name.
#[derive(clap::Args, Debug, Default)]
struct Overrides {
    /// Sequence kind: q-orbit, constant, or explicit.
    #[arg(long, global = true, value_enum)]
    kind: Option<SeqKind>,
    /// Level / starting proportion (q-orbit and constant kinds).
    #[arg(long, global = true)]
    p0: Option<f64>,
    /// Comma-separated proportions for the explicit kind.
    #[arg(long, global = true, value_delimiter = ',')]
    proportions: Option<Vec<f64>>,
    /// Orbit depth N (also the table length for cantor).
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// RNG seed; identical (config, seed) runs are byte-identical.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated gamma grid for regularity.
    #[arg(long, global = true, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Deepest rank scanned by certification.
    #[arg(long, global = true)]
    rank_max: Option<usize>,
    /// First rank of a dimension series.
    #[arg(long, global = true)]
    rank_lo: Option<usize>,
    /// Last rank of a dimension series.
    #[arg(long, global = true)]
    rank_hi: Option<usize>,
    /// Coarsest dyadic octave for cloud series.
    #[arg(long, global = true)]
    octave_lo: Option<u32>,
    /// Finest dyadic octave for cloud series.
    #[arg(long, global = true)]
    octave_hi: Option<u32>,
    /// Nontypicality gap.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Basin tolerance around the space average.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Test-function cutoff distance.
    #[arg(long, global = true)]
    d0: Option<f64>,
    /// Upper end of sampled levels for square/cube clouds.
    #[arg(long, global = true)]
    p_max: Option<f64>,
    /// Grid points per axis for deterministic sampling.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Phase space for birkhoff: sieve or return.
    #[arg(long, global = true, value_enum)]
    map: Option<MapArg>,
    /// Sampling domain for birkhoff clouds: level, square, or cube.
    #[arg(long, global = true, value_enum)]
    domain: Option<Domain>,
    /// Dimension input: exact pairs, rank intervals, or a cloud CSV.
    #[arg(long, global = true, value_enum)]
    source: Option<DimSource>,
    /// Cloud CSV path for `--source cloud`.
    #[arg(long, global = true, value_name = "PATH")]
    cloud: Option<String>,
    /// Cross a 2-d cloud with this many h midpoints before fitting.
    #[arg(long, global = true)]
    product_h: Option<usize>,
    /// Also dump the rank intervals at this rank (cantor).
    #[arg(long, global = true)]
    dump_rank: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Arithmetic mode for cantor/regularity/dimension.
    #[arg(long, global = true, value_enum)]
    mode: Option<ArithMode>,
    /// Worker threads (0 = all cores). Results never depend on this.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum MapArg {
    Sieve,
    Return,
}

impl From<MapArg> for MapKind {
    fn from(arg: MapArg) -> Self {
        match arg {
            MapArg::Sieve => MapKind::Sieve,
            MapArg::Return => MapKind::Return,
        }
    }
}

impl Overrides {
    fn into_partial(self) -> PartialConfig {
        PartialConfig {
            kind: self.kind,
            p0: self.p0,
            proportions: self.proportions,
            depth: self.depth,
            samples: self.samples,
            seed: self.seed,
            gamma: self.gamma,
            rank_max: self.rank_max,
            rank_lo: self.rank_lo,
            rank_hi: self.rank_hi,
            octave_lo: self.octave_lo,
            octave_hi: self.octave_hi,
            alpha: self.alpha,
            tau: self.tau,
            d0: self.d0,
            p_max: self.p_max,
            grid: self.grid,
            map: self.map.map(MapKind::from),
            domain: self.domain,
            source: self.source,
            cloud: self.cloud,
            product_h: self.product_h,
            dump_rank: self.dump_rank,
            out: self.out,
            mode: self.mode,
            parallelism: self.parallelism,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank-interval lengths and survivor measures of a Cantor family.
    Cantor,
    /// Dimension lower bounds via regularity certificates over a gamma grid.
    Regularity,
    /// Escape-time Monte Carlo on the square map.
    Sieve,
    /// Escape-time Monte Carlo on the cube map.
    #[command(name = "return-map")]
    ReturnMap,
    /// Birkhoff averages: basin fraction and the nontypical sample cloud.
    Birkhoff,
    /// Box-count series and log-log dimension fit.
    Dimension,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Cantor => "cantor",
            Command::Regularity => "regularity",
            Command::Sieve => "sieve",
            Command::ReturnMap => "return-map",
            Command::Birkhoff => "birkhoff",
            Command::Dimension => "dimension",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(err)) => {
            eprintln!("internal error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let mut layers = PartialConfig::default();
    if let Some(path) = &cli.config {
        layers = layers.overlay(PartialConfig::from_file(path)?);
    }
    if let Ok(dir) = std::env::var(OUT_ENV_VAR) {
        if !dir.is_empty() {
            layers.out = Some(dir);
        }
    }
    layers = layers.overlay(cli.overrides.into_partial());
    let cfg = ExperimentConfig::resolve(cli.command.name(), layers)?;

    if cfg.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build_global()
            .map_err(|e| CliError::Internal(anyhow::anyhow!("thread pool: {e}")))?;
    }

    let writer = OutputWriter::new(&cfg)?;
    let payload = match cli.command {
        Command::Cantor => commands::run_cantor(&cfg, &writer)?,
        Command::Regularity => commands::run_regularity(&cfg, &writer)?,
        Command::Sieve => commands::run_map_mc(&cfg, &writer, MapKind::Sieve)?,
        Command::ReturnMap => commands::run_map_mc(&cfg, &writer, MapKind::Return)?,
        Command::Birkhoff => commands::run_birkhoff(&cfg, &writer)?,
        Command::Dimension => commands::run_dimension(&cfg, &writer)?,
    };

    let record = json!({
        "subcommand": cfg.subcommand,
        "config_hash": cfg.hash(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "wall_time_secs": started.elapsed().as_secs_f64(),
        "payload": payload,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&record)
            .map_err(|e| CliError::Internal(anyhow::anyhow!("run record: {e}")))?
    );
    Ok(())
}
