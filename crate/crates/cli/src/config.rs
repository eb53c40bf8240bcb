//! Experiment configuration: flat key-value file (TOML scalars and arrays),
//! every key overridable by a command-line flag of the same name, with the
//! output directory also overridable through `SIEVEDIM_OUT`.
//!
//! Precedence: built-in defaults < config file < environment < flags. The
//! resolved config is what gets hashed; identical resolved configs produce
//! identical output files regardless of parallelism.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sievedim::dynamics::MapKind;

use crate::CliError;

pub const OUT_ENV_VAR: &str = "SIEVEDIM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SeqKind {
    QOrbit,
    Constant,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ArithMode {
    Float,
    Exact,
}

/// Where birkhoff samples nontypical points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// One level of the square: 1-d cloud of x.
    Level,
    /// The square over levels up to p_max: 2-d (x, p) cloud.
    Square,
    /// The cube over levels up to p_max: 3-d (x, p, h) cloud.
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DimSource {
    /// Exact `(lambda_n, 2^n)` pairs, no grid.
    Exact,
    /// Rank family counted on its own scale ladder `lambda_k`.
    Intervals,
    /// A point-cloud CSV counted on the dyadic ladder `2^-k`.
    Cloud,
}

/// Fully resolved run configuration; serializes round-trip stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subcommand: String,
    pub kind: SeqKind,
    pub p0: f64,
    /// Explicit deletion proportions; used only when `kind = explicit`.
    pub proportions: Vec<f64>,
    pub depth: usize,
    pub samples: u64,
    pub seed: u64,
    pub gamma: Vec<f64>,
    pub rank_max: usize,
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub octave_lo: u32,
    pub octave_hi: u32,
    pub alpha: f64,
    pub tau: f64,
    pub d0: f64,
    pub p_max: f64,
    pub grid: usize,
    pub map: MapKind,
    pub domain: Domain,
    pub source: DimSource,
    pub cloud: Option<String>,
    pub product_h: usize,
    pub dump_rank: Option<usize>,
    pub out: String,
    pub mode: ArithMode,
    pub parallelism: usize,
}

/// The file/flag layer: everything optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub kind: Option<SeqKind>,
    pub p0: Option<f64>,
    pub proportions: Option<Vec<f64>>,
    pub depth: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub gamma: Option<Vec<f64>>,
    pub rank_max: Option<usize>,
    pub rank_lo: Option<usize>,
    pub rank_hi: Option<usize>,
    pub octave_lo: Option<u32>,
    pub octave_hi: Option<u32>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub d0: Option<f64>,
    pub p_max: Option<f64>,
    pub grid: Option<usize>,
    pub map: Option<MapKind>,
    pub domain: Option<Domain>,
    pub source: Option<DimSource>,
    pub cloud: Option<String>,
    pub product_h: Option<usize>,
    pub dump_rank: Option<usize>,
    pub out: Option<String>,
    pub mode: Option<ArithMode>,
    pub parallelism: Option<usize>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }

    /// Overlay `other` on top of `self` (later layers win).
    pub fn overlay(mut self, other: PartialConfig) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            kind, p0, proportions, depth, samples, seed, gamma, rank_max, rank_lo, rank_hi,
            octave_lo, octave_hi, alpha, tau, d0, p_max, grid, map, domain, source, cloud, product_h,
            dump_rank, out, mode, parallelism
        );
        self
    }
}

impl ExperimentConfig {
    /// Fill defaults for a subcommand, then validate against the module
    /// preconditions before any work starts.
    pub fn resolve(subcommand: &str, layers: PartialConfig) -> Result<Self, CliError> {
        let birkhoff = subcommand == "birkhoff";
        let cfg = ExperimentConfig {
            subcommand: subcommand.to_string(),
            kind: layers.kind.unwrap_or(SeqKind::QOrbit),
            p0: layers.p0.unwrap_or(0.5),
            proportions: layers.proportions.unwrap_or_default(),
            depth: layers.depth.unwrap_or(if birkhoff { 999 } else { 9 }),
            samples: layers.samples.unwrap_or(100_000),
            seed: layers.seed.unwrap_or(42),
            gamma: layers.gamma.unwrap_or_else(|| vec![0.5, 0.75, 0.9, 0.95, 0.99]),
            rank_max: layers.rank_max.unwrap_or(1000),
            rank_lo: layers.rank_lo.unwrap_or(4),
            rank_hi: layers.rank_hi.unwrap_or(12),
            octave_lo: layers.octave_lo.unwrap_or(1),
            octave_hi: layers.octave_hi.unwrap_or(8),
            alpha: layers.alpha.unwrap_or(0.5),
            tau: layers.tau.unwrap_or(0.3),
            d0: layers.d0.unwrap_or(0.4),
            p_max: layers.p_max.unwrap_or(0.5),
            grid: layers.grid.unwrap_or(4096),
            map: layers.map.unwrap_or(MapKind::Sieve),
            domain: layers.domain.unwrap_or(match layers.map.unwrap_or(MapKind::Sieve) {
                MapKind::Sieve => Domain::Level,
                MapKind::Return => Domain::Cube,
            }),
            source: layers.source.unwrap_or(DimSource::Exact),
            cloud: layers.cloud,
            product_h: layers.product_h.unwrap_or(0),
            dump_rank: layers.dump_rank,
            out: layers.out.unwrap_or_else(|| "results".into()),
            mode: layers.mode.unwrap_or(ArithMode::Float),
            parallelism: layers.parallelism.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Input(msg));
        match self.kind {
            SeqKind::Explicit => {
                if self.proportions.is_empty() {
                    return fail("explicit sequence needs `proportions`".into());
                }
                for (i, p) in self.proportions.iter().enumerate() {
                    if !(*p > 0.0 && *p < 1.0) {
                        return fail(format!("proportions[{i}] = {p} outside (0, 1)"));
                    }
                }
            }
            SeqKind::Constant => {
                if !(self.p0 > 0.0 && self.p0 < 1.0) {
                    return fail(format!("constant proportion p0 = {} outside (0, 1)", self.p0));
                }
            }
            SeqKind::QOrbit => {
                if !(self.p0 > 0.0 && self.p0 <= 1.0) {
                    return fail(format!("q-orbit start p0 = {} outside (0, 1]", self.p0));
                }
            }
        }
        if self.depth == 0 {
            return fail("depth must be at least 1".into());
        }
        if self.samples == 0 {
            return fail("samples must be at least 1".into());
        }
        for g in &self.gamma {
            if !(*g > 0.0 && *g < 1.0) {
                return fail(format!("gamma = {g} outside (0, 1)"));
            }
        }
        if self.rank_max == 0 || self.rank_max > 10_000 {
            return fail(format!("rank_max = {} outside 1..=10000", self.rank_max));
        }
        if self.rank_lo + 2 > self.rank_hi {
            return fail(format!(
                "rank range {}..{} needs at least two ranks",
                self.rank_lo, self.rank_hi
            ));
        }
        if self.octave_lo + 2 > self.octave_hi {
            return fail(format!(
                "octave range {}..{} needs at least two scales",
                self.octave_lo, self.octave_hi
            ));
        }
        if !(self.alpha > 0.0) {
            return fail(format!("alpha = {} must be positive", self.alpha));
        }
        if !(self.tau > 0.0) {
            return fail(format!("tau = {} must be positive", self.tau));
        }
        if !(self.d0 > 0.0) {
            return fail(format!("d0 = {} must be positive", self.d0));
        }
        if !(self.p_max > 0.0 && self.p_max <= 0.5) {
            return fail(format!("p_max = {} outside (0, 1/2]", self.p_max));
        }
        if self.grid == 0 {
            return fail("grid must be at least 1".into());
        }
        if self.map == MapKind::Return && self.p0 > 0.5 {
            return fail(format!("return map levels need p0 <= 1/2, got {}", self.p0));
        }
        if self.subcommand == "return-map" && self.p0 > 0.5 {
            return fail(format!("return map levels need p0 <= 1/2, got {}", self.p0));
        }
        match (self.domain, self.map) {
            (Domain::Cube, MapKind::Sieve) => {
                return fail("the cube domain needs --map return".into())
            }
            (Domain::Level | Domain::Square, MapKind::Return) => {
                return fail("level and square domains need --map sieve".into())
            }
            _ => {}
        }
        let mc = matches!(self.subcommand.as_str(), "sieve" | "return-map" | "birkhoff");
        if mc && self.mode == ArithMode::Exact {
            return fail("exact mode applies to cantor/regularity/dimension; Monte Carlo subcommands run in float".into());
        }
        if self.subcommand == "dimension" && self.source == DimSource::Cloud && self.cloud.is_none()
        {
            return fail("dimension --source cloud needs --cloud PATH".into());
        }
        if self.product_h > 0 && self.source != DimSource::Cloud {
            return fail("--product-h applies only to --source cloud".into());
        }
        Ok(())
    }

    /// Canonical serialization; also what round-trips through the config
    /// file format.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex digest identifying the experiment, shortened for headers.
    ///
    /// Execution details that cannot change results are excluded: the
    /// output directory and the parallelism degree. A cloud input is
    /// identified by its content, not its path.
    pub fn hash(&self) -> String {
        let mut id = self.clone();
        id.out = String::new();
        id.parallelism = 0;
        if let Some(path) = id.cloud.take() {
            id.cloud = Some(match std::fs::read(&path) {
                Ok(bytes) => {
                    let d = Sha256::digest(&bytes);
                    d.iter().map(|b| format!("{b:02x}")).collect()
                }
                Err(_) => path,
            });
        }
        let digest = Sha256::digest(id.canonical_toml().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_string()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out)
    }

    pub fn float_sequence(&self) -> Result<sievedim::FloatSequence, CliError> {
        use sievedim::cantor::DeletionSequence;
        let seq = match self.kind {
            SeqKind::QOrbit => DeletionSequence::q_orbit(self.p0),
            SeqKind::Constant => DeletionSequence::constant(self.p0),
            SeqKind::Explicit => DeletionSequence::explicit(self.proportions.clone()),
        };
        seq.map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn exact_sequence(&self) -> Result<sievedim::ExactSequence, CliError> {
        use sievedim::cantor::DeletionSequence;
        let conv = |v: f64| {
            sievedim::exact_from_f64(v)
                .ok_or_else(|| CliError::Input(format!("{v} is not a finite proportion")))
        };
        let seq = match self.kind {
            SeqKind::QOrbit => DeletionSequence::q_orbit(conv(self.p0)?),
            SeqKind::Constant => DeletionSequence::constant(conv(self.p0)?),
            SeqKind::Explicit => {
                let list: Result<Vec<_>, _> =
                    self.proportions.iter().map(|p| conv(*p)).collect();
                DeletionSequence::explicit(list?)
            }
        };
        seq.map_err(|e| CliError::Input(e.to_string()))
    }
}
