//! Command-line flags, the optional JSON config file and their merge into a run configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fracdisk::analysis::EvolutionErrorMeasure;
use fracdisk::{ModelParams, SourceSpec};
use serde::Deserialize;

use crate::Failure;

/// Spectral solver for anisotropic fractional diffusion on the unit disk.
#[derive(Debug, Parser)]
#[command(name = "fracdisk", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the steady problem and write the solution, field grid and cross-sections.
    Steady(Flags),
    /// Run backward Euler from a zero initial field and write snapshots.
    Evolve(Flags),
    /// Spatial convergence table against a high-degree reference.
    ConvergeSteady(Flags),
    /// Space-time convergence table for the manufactured solution.
    ConvergeEvolve(Flags),
    /// Write the source coefficients and the projected source on the grid.
    Project(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Steady(f)
            | Command::Evolve(f)
            | Command::ConvergeSteady(f)
            | Command::ConvergeEvolve(f)
            | Command::Project(f) => f,
        }
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Fractional order in (1, 2].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Diffusivity along x1.
    #[arg(long)]
    pub k1: Option<f64>,
    /// Diffusivity along x2.
    #[arg(long)]
    pub k2: Option<f64>,
    /// Radial-degree cap (first schedule level for converge-evolve).
    #[arg(long = "R")]
    pub cap: Option<usize>,
    /// Source term: bubble, cusp or manufactured.
    #[arg(long)]
    pub source: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Time step (first schedule level for converge-evolve).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Snapshot times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Output grid as NRxNPHI.
    #[arg(long)]
    pub grid: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reference cap of the steady convergence study.
    #[arg(long = "ref-R")]
    pub ref_cap: Option<usize>,
    /// Balancing exponent p of the space-time schedule.
    #[arg(long = "schedule-p")]
    pub schedule_p: Option<f64>,
    /// JSON config file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Source entry of the config file: a name or a full descriptor.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SourceEntry {
    Name(String),
    Spec(SourceSpec),
}

/// Contents of the JSON config file. Every entry is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    #[serde(rename = "R")]
    pub cap: Option<usize>,
    pub source: Option<SourceEntry>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    #[serde(rename = "N")]
    pub n_steps: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub grid: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(rename = "ref_R")]
    pub ref_cap: Option<usize>,
    pub schedule_p: Option<f64>,
    /// Cap list of the steady study.
    pub caps: Option<Vec<usize>>,
    /// Source regularity used for the theoretical rate line.
    pub regularity: Option<f64>,
    /// Number of schedule levels of the evolution study.
    pub levels: Option<usize>,
    /// Error measure of the evolution study.
    pub measure: Option<EvolutionErrorMeasure>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("cannot parse config {}: {e}", path.display())))
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub cap: Option<usize>,
    pub source: Option<SourceSpec>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub grid: (usize, usize),
    pub out: PathBuf,
    pub ref_cap: Option<usize>,
    pub schedule_p: Option<f64>,
    pub caps: Option<Vec<usize>>,
    pub regularity: Option<f64>,
    pub levels: Option<usize>,
    pub measure: Option<EvolutionErrorMeasure>,
}

pub const DEFAULT_ALPHA: f64 = 1.7;
pub const DEFAULT_K: (f64, f64) = (3.0, 9.0);
pub const DEFAULT_GRID: (usize, usize) = (101, 256);

/// Parses `NRxNPHI`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::config(format!("grid must look like 101x256, got '{s}'"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let nr = a.trim().parse().map_err(|_| bad())?;
    let nphi = b.trim().parse().map_err(|_| bad())?;
    if nr < 2 || nphi < 1 {
        return Err(Failure::config(format!(
            "grid needs NR >= 2 and NPHI >= 1, got '{s}'"
        )));
    }
    Ok((nr, nphi))
}

fn resolve_source(entry: SourceEntry) -> Result<SourceSpec, Failure> {
    let spec = match entry {
        SourceEntry::Name(n) => SourceSpec::from_name(&n)?,
        SourceEntry::Spec(s) => s,
    };
    spec.validate()?;
    Ok(spec)
}

impl RunConfig {
    /// Merges flags over the config file over the defaults.
    pub fn resolve(flags: &Flags) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let alpha = flags.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        let k1 = flags.k1.or(file.k1).unwrap_or(DEFAULT_K.0);
        let k2 = flags.k2.or(file.k2).unwrap_or(DEFAULT_K.1);
        let params = ModelParams::new(alpha, k1, k2)?;
        let source = match (&flags.source, file.source) {
            (Some(name), _) => Some(resolve_source(SourceEntry::Name(name.clone()))?),
            (None, Some(entry)) => Some(resolve_source(entry)?),
            (None, None) => None,
        };
        let grid = match flags.grid.as_deref().or(file.grid.as_deref()) {
            Some(s) => parse_grid(s)?,
            None => DEFAULT_GRID,
        };
        let positive = |name: &str, v: Option<f64>| -> Result<Option<f64>, Failure> {
            match v {
                Some(x) if !(x.is_finite() && x > 0.0) => {
                    Err(Failure::config(format!("{name} must be positive, got {x}")))
                }
                other => Ok(other),
            }
        };
        let t_final = flags.t_final.or(file.t_final);
        if let Some(t) = t_final {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Failure::config(format!("T must be non-negative, got {t}")));
            }
        }
        Ok(Self {
            params,
            cap: flags.cap.or(file.cap),
            source,
            t_final,
            dt: positive("dt", flags.dt.or(file.dt))?,
            n_steps: file.n_steps,
            times: flags.times.clone().or(file.times),
            grid,
            out: flags
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            ref_cap: flags.ref_cap.or(file.ref_cap),
            schedule_p: positive("schedule-p", flags.schedule_p.or(file.schedule_p))?,
            caps: file.caps,
            regularity: file.regularity,
            levels: file.levels,
            measure: file.measure,
        })
    }
}
