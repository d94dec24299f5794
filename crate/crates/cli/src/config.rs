//! Command-line surface, the JSON input document and their resolution into a
//! [`CommandConfig`].

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kptoda_core::toda_core::Precision;
use kptoda_core::{SolitonData, TimeVector};
use serde::Deserialize;

use crate::checks::Tolerances;
use crate::CliError;

pub const PRECISION_ENV: &str = "KPTODA_PRECISION";

#[derive(Debug, Parser)]
#[command(
    name = "kptoda",
    version,
    about = "KP line solitons, Toda flows and their spectral divisors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize and check soliton data.
    Validate(DataArgs),
    /// k-compatible divisor with oval assignment.
    Divisor(DataArgs),
    /// Jacobi matrix of the Toda hierarchy at the given times.
    Toda {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = TodaRoute::Tau)]
        route: TodaRoute,
    },
    /// KP field on a grid, written as CSV.
    Field {
        #[command(flatten)]
        data: DataArgs,
        /// `x=lo:hi:count,y=lo:hi:count,t=lo:hi:count`
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Dual data, dual divisor and product laws.
    Dual(DataArgs),
    /// Soliton data from a k-compatible divisor.
    Invert {
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        kappa: Vec<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        gamma: Vec<f64>,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Baker-Akhiezer vectors and dressed wavefunction at one spectral value.
    Ba {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, allow_hyphen_values = true)]
        zeta: f64,
    },
    /// Seeded verification suite over random instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TodaRoute {
    Tau,
    Bruhat,
    Divisor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionProfile {
    Standard,
    ExtendedTest,
}

impl PrecisionProfile {
    pub fn name(self) -> &'static str {
        match self {
            PrecisionProfile::Standard => "standard",
            PrecisionProfile::ExtendedTest => "extended-test",
        }
    }
}

impl FromStr for PrecisionProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "standard" => Ok(PrecisionProfile::Standard),
            "extended-test" => Ok(PrecisionProfile::ExtendedTest),
            other => Err(format!("unknown precision profile `{other}`")),
        }
    }
}

impl From<PrecisionProfile> for Precision {
    fn from(p: PrecisionProfile) -> Precision {
        match p {
            PrecisionProfile::Standard => Precision::Standard,
            PrecisionProfile::ExtendedTest => Precision::ExtendedTest,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// JSON document with fields kappa, a, k, t, grid, seed.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub kappa: Option<Vec<f64>>,
    /// Positive weights; normalized to sum 1.
    #[arg(long = "a", allow_hyphen_values = true, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Hierarchy times t_1,t_2,...
    #[arg(long = "t", allow_hyphen_values = true, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionProfile>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long)]
    pub tol_identity: Option<f64>,
    #[arg(long)]
    pub tol_fd: Option<f64>,
    #[arg(long)]
    pub tol_gluing: Option<f64>,
}

/// Input document; every field is optional and command-line flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub kappa: Option<Vec<f64>>,
    pub a: Option<Vec<f64>>,
    pub k: Option<usize>,
    pub t: Option<Vec<f64>>,
    pub grid: Option<String>,
    pub seed: Option<u64>,
}

impl InputDocument {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Errors carry the line and column of the offending field.
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

/// One axis `lo:hi:count` of a field grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub t: Axis,
}

impl GridSpec {
    /// Points in row-major order with `x` fastest, then `y`, then `t`.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let (xs, ys, ts) = (self.x.values(), self.y.values(), self.t.values());
        let mut pts = Vec::with_capacity(xs.len() * ys.len() * ts.len());
        for &t in &ts {
            for &y in &ys {
                for &x in &xs {
                    pts.push((x, y, t));
                }
            }
        }
        pts
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut axes: [Option<Axis>; 3] = [None; 3];
        for part in s.split(',') {
            let (name, range) = part
                .split_once('=')
                .ok_or_else(|| format!("grid axis `{part}` must look like x=lo:hi:count"))?;
            let slot = match name.trim() {
                "x" => 0,
                "y" => 1,
                "t" => 2,
                other => return Err(format!("unknown grid axis `{other}`")),
            };
            let fields: Vec<&str> = range.split(':').collect();
            if fields.len() != 3 {
                return Err(format!("grid axis `{part}` must look like {name}=lo:hi:count"));
            }
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number `{v}` in grid axis {name}"))
            };
            let count: usize = fields[2]
                .trim()
                .parse()
                .map_err(|_| format!("bad count `{}` in grid axis {name}", fields[2]))?;
            if count == 0 {
                return Err(format!("grid axis {name} needs at least one point"));
            }
            axes[slot] = Some(Axis {
                lo: num(fields[0])?,
                hi: num(fields[1])?,
                count,
            });
        }
        let single = Axis {
            lo: 0.0,
            hi: 0.0,
            count: 1,
        };
        Ok(GridSpec {
            x: axes[0].ok_or("grid needs an x axis")?,
            y: axes[1].unwrap_or(single),
            t: axes[2].unwrap_or(single),
        })
    }
}

/// Options after merging flags, the input document and the environment.
#[derive(Debug, Clone)]
pub struct CommandConfig {
    pub subcommand: &'static str,
    /// Fixed instance; `verify` draws random ones when absent.
    pub data: Option<SolitonData>,
    pub k: Option<usize>,
    pub t: TimeVector,
    pub grid: Option<GridSpec>,
    pub precision: PrecisionProfile,
    pub seed: u64,
    pub trials: usize,
    pub n_max: usize,
    pub tolerances: Tolerances,
}

impl CommandConfig {
    pub fn defaults(subcommand: &'static str) -> Self {
        CommandConfig {
            subcommand,
            data: None,
            k: None,
            t: TimeVector::zero(),
            grid: None,
            precision: PrecisionProfile::Standard,
            seed: 42,
            trials: 100,
            n_max: 8,
            tolerances: Tolerances::default(),
        }
    }

    pub fn require_data(&self) -> Result<&SolitonData, CliError> {
        self.data
            .as_ref()
            .ok_or_else(|| CliError::Usage("soliton data needed: pass --kappa and --a, or --input".into()))
    }

    pub fn require_k(&self) -> Result<usize, CliError> {
        self.k.ok_or_else(|| CliError::Usage("--k is required".into()))
    }
}

fn env_precision() -> Result<Option<PrecisionProfile>, CliError> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("{PRECISION_ENV}: {e}"))),
        Err(_) => Ok(None),
    }
}

/// Merges flags over the input document; the precision flag wins over the
/// environment variable.
pub fn resolve(subcommand: &'static str, args: &DataArgs, grid: Option<&str>) -> Result<CommandConfig, CliError> {
    let doc = match &args.input {
        Some(path) => InputDocument::load(path)?,
        None => InputDocument::default(),
    };
    let mut config = CommandConfig::defaults(subcommand);
    let kappa = args.kappa.clone().or(doc.kappa);
    let weights = args.weights.clone().or(doc.a);
    config.data = match (kappa, weights) {
        (Some(kappa), Some(weights)) => Some(SolitonData::new(&kappa, &weights)?),
        (None, None) => None,
        _ => return Err(CliError::Usage("--kappa and --a must be given together".into())),
    };
    config.k = args.k.or(doc.k);
    if let Some(t) = args.times.clone().or(doc.t) {
        config.t = TimeVector::new(&t)?;
    }
    if let Some(spec) = grid.map(str::to_owned).or(doc.grid) {
        config.grid = Some(spec.parse().map_err(CliError::Usage)?);
    }
    if let Some(seed) = doc.seed {
        config.seed = seed;
    }
    config.precision = match args.precision {
        Some(p) => p,
        None => env_precision()?.unwrap_or(PrecisionProfile::Standard),
    };
    Ok(config)
}
