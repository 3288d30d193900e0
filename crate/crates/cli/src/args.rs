use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use stickbreak::{SuccessPrior, SuccessProbability, WeightFamily};

/// Reproduction experiments for geometric and negative-binomial
/// stick-breaking: weights, expected numbers of distinct values,
/// asymptotic expansions, Monte Carlo and a self-check suite.
#[derive(Debug, Parser)]
#[command(name = "stickbreak", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First J weights with cumulative sum and remaining tail mass.
    Weights(Options),
    /// Exact E(K_n) next to the Poissonized Φ(n) and the gap bound 2Φ(n)/n.
    Expect(Options),
    /// Expansion terms, reference value and residuals over a grid.
    Expand {
        #[arg(value_enum)]
        proposition: Proposition,
        #[command(flatten)]
        options: Options,
    },
    /// Monte Carlo mean of K_n compared with the quadrature value.
    Mc(Options),
    /// Run the invariant suite; exit code 1 if a check fails.
    Verify {
        /// Multiplies every check tolerance (0 forces failures).
        #[arg(long)]
        tol_scale: Option<f64>,
        #[command(flatten)]
        options: Options,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Weights(_) => "weights",
            Command::Expect(_) => "expect",
            Command::Expand { .. } => "expand",
            Command::Mc(_) => "mc",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposition {
    FixedP,
    UniformS2,
    LoggammaM,
    Rho,
    NegbinS3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by all commands. Every flag overrides the matching key of
/// the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Negative binomial scale s (2 = geometric).
    #[arg(long)]
    pub family: Option<u32>,
    /// uniform | loggamma:m | rho:v
    #[arg(long)]
    pub prior: Option<PriorArg>,
    /// Fixed success probability instead of a prior.
    #[arg(long)]
    pub p: Option<f64>,
    /// Sample sizes: "10,100" or a decade range "1e1..1e6".
    #[arg(long)]
    pub n_grid: Option<Grid>,
    /// Poisson times, same syntax as --n-grid.
    #[arg(long)]
    pub t_grid: Option<Grid>,
    /// Thresholds in (0, 1), e.g. "1e-12..1e-4".
    #[arg(long)]
    pub x_grid: Option<Grid>,
    /// Absolute error target of occupancy sums.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Number of weights printed by `weights`.
    #[arg(long)]
    pub count: Option<u64>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorArg(pub SuccessPrior);

impl FromStr for PriorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let prior = match s.split_once(':') {
            None if s == "uniform" => SuccessPrior::Uniform,
            Some(("loggamma", m)) => {
                SuccessPrior::LogGamma(m.parse().map_err(|_| format!("bad loggamma exponent '{m}'"))?)
            }
            Some(("rho", v)) => {
                let rho: f64 = v.parse().map_err(|_| format!("bad rho '{v}'"))?;
                SuccessPrior::log_gamma_rho(rho).map_err(|e| e.to_string())?
            }
            _ => return Err(format!("unknown prior '{s}' (uniform | loggamma:m | rho:v)")),
        };
        prior.validate().map_err(|e| e.to_string())?;
        Ok(PriorArg(prior))
    }
}

impl fmt::Display for PriorArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            SuccessPrior::Uniform => write!(f, "uniform"),
            SuccessPrior::LogGamma(m) => write!(f, "loggamma:{m}"),
            SuccessPrior::LogGammaRho(rho) => write!(f, "rho:{rho}"),
        }
    }
}

/// Strictly increasing list of positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse =
            |v: &str| -> Result<f64, String> { v.trim().parse::<f64>().map_err(|_| format!("bad grid value '{v}'")) };
        let values = match s.split_once("..") {
            Some((lo, hi)) => decade_range(parse(lo)?, parse(hi)?)?,
            None => s.split(',').map(parse).collect::<Result<_, _>>()?,
        };
        Grid::new(values)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::List(v) => Grid::new(v).map_err(serde::de::Error::custom),
        }
    }
}

impl Grid {
    pub fn new(values: Vec<f64>) -> Result<Self, String> {
        if values.is_empty() {
            return Err("empty grid".into());
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err("grid values must be positive and finite".into());
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err("grid must be strictly increasing".into());
        }
        Ok(Grid(values))
    }

    /// Values as sample sizes; they must be integers.
    pub fn as_counts(&self) -> anyhow::Result<Vec<u64>> {
        self.0
            .iter()
            .map(|&v| {
                if v.fract() != 0.0 || v > 1e19 {
                    bail!("sample size {v} is not an integer");
                }
                Ok(v as u64)
            })
            .collect()
    }
}

/// `lo, 10·lo, …` up to `hi`. Powers of ten are produced from their decimal
/// form so that `1e-12..1e-4` yields the exact literals.
fn decade_range(lo: f64, hi: f64) -> Result<Vec<f64>, String> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(format!("bad decade range {lo}..{hi}"));
    }
    let e0 = lo.log10().round();
    let is_power = (10f64.powi(e0 as i32) / lo - 1.0).abs() < 1e-12;
    let mut out = Vec::new();
    for k in 0.. {
        let v = if is_power {
            format!("1e{}", e0 as i32 + k)
                .parse::<f64>()
                .map_err(|e| e.to_string())?
        } else {
            lo * 10f64.powi(k)
        };
        if v > hi * (1.0 + 1e-12) {
            break;
        }
        out.push(v);
        if out.len() > 400 {
            return Err("decade range too long".into());
        }
    }
    Ok(out)
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Option<String>,
    pub proposition: Option<Proposition>,
    pub family: Option<u32>,
    pub prior: Option<String>,
    pub p: Option<f64>,
    pub n_grid: Option<Grid>,
    pub t_grid: Option<Grid>,
    pub x_grid: Option<Grid>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub count: Option<u64>,
    pub tol_scale: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Flags merged with the config file and defaults, validated.
#[derive(Debug, Clone)]
pub struct Settings {
    pub family: WeightFamily,
    pub prior: SuccessPrior,
    pub p: Option<SuccessProbability>,
    pub n_grid: Option<Grid>,
    pub t_grid: Option<Grid>,
    pub x_grid: Option<Grid>,
    pub eps: f64,
    pub seed: u64,
    pub reps: u64,
    pub count: u64,
    pub tol_scale: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_EPS: f64 = 1e-7;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPS: u64 = 10_000;
pub const DEFAULT_COUNT: u64 = 10;

impl Settings {
    pub fn resolve(command: &'static str, options: &Options, tol_scale: Option<f64>) -> anyhow::Result<Self> {
        let spec = match &options.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(c) = &spec.command {
            if c != command {
                bail!("config file is for command '{c}', not '{command}'");
            }
        }
        let prior = match (&options.prior, &spec.prior) {
            (Some(p), _) => p.0,
            (None, Some(text)) => text.parse::<PriorArg>().map_err(anyhow::Error::msg)?.0,
            (None, None) => SuccessPrior::Uniform,
        };
        let family = WeightFamily::new(options.family.or(spec.family).unwrap_or(2))?;
        let p = options.p.or(spec.p).map(SuccessProbability::new).transpose()?;
        let eps = options.eps.or(spec.eps).unwrap_or(DEFAULT_EPS);
        if !(eps > 0.0 && eps <= 1e-3) {
            bail!("--eps must lie in (0, 1e-3], got {eps}");
        }
        let tol_scale = tol_scale.or(spec.tol_scale).unwrap_or(1.0);
        if !(tol_scale >= 0.0 && tol_scale.is_finite()) {
            bail!("--tol-scale must be a finite number >= 0");
        }
        Ok(Settings {
            family,
            prior,
            p,
            n_grid: options.n_grid.clone().or(spec.n_grid),
            t_grid: options.t_grid.clone().or(spec.t_grid),
            x_grid: options.x_grid.clone().or(spec.x_grid),
            eps,
            seed: options.seed.or(spec.seed).unwrap_or(DEFAULT_SEED),
            reps: options.reps.or(spec.reps).unwrap_or(DEFAULT_REPS),
            count: options.count.or(spec.count).unwrap_or(DEFAULT_COUNT),
            tol_scale,
            out: options.out.clone().or(spec.out),
            format: options.format.or(spec.format).unwrap_or_default(),
        })
    }
}

/// Reads only the `proposition` key, for `expand` runs that take it from the
/// config file.
pub fn proposition_from_config(options: &Options) -> anyhow::Result<Option<Proposition>> {
    match &options.config {
        Some(path) => Ok(ExperimentSpec::load(path)?.proposition),
        None => Ok(None),
    }
}
