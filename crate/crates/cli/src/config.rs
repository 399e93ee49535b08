//! Command-line flags, `key=value` config files and the validated run record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use asepqj_core::{BoundaryKind, InitialCondition, QParams, StepSign};
use clap::{Args, Parser, Subcommand};

use crate::CliError;

pub const SEED_ENV: &str = "ASEPQJ_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "asepqj", version, about = "Exact checks, current moments and Monte Carlo for ASEP(q,j)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the identity suite on a small chain and report residuals.
    Verify(Flags),
    /// Simulate trajectories and print the currents through the chosen bonds.
    Simulate(Flags),
    /// Compare Monte Carlo current moments with their closed forms.
    Moment(Flags),
    /// Tabulate the rate function and the growth exponent.
    Ldp(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Verify(f) | Command::Simulate(f) | Command::Moment(f) | Command::Ldp(f) => f,
        }
    }
}

/// Every flag is optional so that a config file can supply it.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Asymmetry q in (0, 1].
    #[arg(long)]
    pub q: Option<f64>,
    /// Twice the spin, the site capacity.
    #[arg(long = "two-j")]
    pub two_j: Option<u32>,
    /// Chain length for verify and simulate.
    #[arg(long, visible_alias = "window")]
    pub length: Option<usize>,
    /// closed, periodic or truncated.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Comma-separated times.
    #[arg(long)]
    pub time: Option<String>,
    /// Comma-separated bond labels i for the bonds (i-1, i); `a..b` is a range.
    #[arg(long, allow_hyphen_values = true)]
    pub bonds: Option<String>,
    #[arg(long)]
    pub trajectories: Option<u64>,
    /// Master seed; falls back to the ASEPQJ_SEED environment variable.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated fugacities for the reversible measures.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma-separated single-site weights for product initial data.
    #[arg(long)]
    pub mu: Option<String>,
    /// step+, step- or product.
    #[arg(long)]
    pub initial: Option<String>,
    /// CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Multiplier applied to every upper tolerance.
    #[arg(long = "tol-scale")]
    pub tol_scale: Option<f64>,
    /// Worker threads for simulate and moment.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Grid points for ldp.
    #[arg(long)]
    pub points: Option<usize>,
    /// File of key=value lines; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Negative control: perturbs one jump rate before verification.
    #[arg(long = "corrupt-rate", hide = true)]
    pub corrupt_rate: bool,
}

/// Validated parameters shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: QParams,
    pub length: usize,
    pub boundary: BoundaryKind,
    pub times: Vec<f64>,
    pub bonds: Vec<i64>,
    pub trajectories: u64,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub mu: Option<Vec<f64>>,
    pub initial: InitialCondition,
    pub out: Option<PathBuf>,
    pub tol_scale: f64,
    pub workers: Option<usize>,
    pub points: usize,
    pub corrupt_rate: bool,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key=value", n + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| invalid(format!("cannot parse {key} = {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_one(key, s)).collect()
}

/// Parses bond lists such as `-2..2,5`.
fn parse_bonds(v: &str) -> Result<Vec<i64>, CliError> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (i64, i64) = (parse_one("bonds", a)?, parse_one("bonds", b)?);
                if b < a {
                    return Err(invalid(format!("empty bond range {part}")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_one("bonds", part)?),
        }
    }
    if out.is_empty() {
        return Err(invalid("no bonds given"));
    }
    Ok(out)
}

fn parse_initial(v: &str) -> Result<&'static str, CliError> {
    match v.trim() {
        "step+" | "step-plus" => Ok("step+"),
        "step-" | "step-minus" => Ok("step-"),
        "product" => Ok("product"),
        other => Err(invalid(format!("unknown initial condition {other:?}; use step+, step- or product"))),
    }
}

const KNOWN_KEYS: [&str; 16] = [
    "q", "two-j", "length", "window", "boundary", "time", "bonds", "trajectories", "seed", "alpha", "mu", "initial", "out",
    "tol-scale", "workers", "points",
];

impl RunConfig {
    /// Merges flags over the config file over the environment over defaults.
    pub fn resolve(flags: &Flags, env_seed: Option<String>) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(invalid(format!("unknown config key {k:?}")));
        }
        let get = |k: &str| file.get(k).map(String::as_str);

        let q = match flags.q {
            Some(q) => q,
            None => get("q").map(|v| parse_one("q", v)).transpose()?.unwrap_or(0.5),
        };
        let two_j = match flags.two_j {
            Some(v) => v,
            None => get("two-j").map(|v| parse_one("two-j", v)).transpose()?.unwrap_or(2),
        };
        let params = QParams::new(q, two_j).map_err(|e| invalid(e.to_string()))?;
        let length = match flags.length {
            Some(v) => v,
            None => get("length").or(get("window")).map(|v| parse_one("length", v)).transpose()?.unwrap_or(3),
        };
        if length == 0 {
            return Err(invalid("length must be positive"));
        }
        let boundary_text = flags.boundary.clone().or(get("boundary").map(String::from)).unwrap_or_else(|| "closed".into());
        let boundary: BoundaryKind = boundary_text.parse().map_err(|e: asepqj_core::Error| invalid(e.to_string()))?;
        let times = match flags.time.as_deref().or(get("time")) {
            Some(v) => parse_list("time", v)?,
            None => vec![1.0],
        };
        if times.is_empty() || times.iter().any(|t: &f64| !(*t >= 0.0 && t.is_finite())) {
            return Err(invalid("times must be finite and nonnegative"));
        }
        let bonds = match flags.bonds.as_deref().or(get("bonds")) {
            Some(v) => parse_bonds(v)?,
            None => vec![0],
        };
        let trajectories = match flags.trajectories {
            Some(v) => v,
            None => get("trajectories").map(|v| parse_one("trajectories", v)).transpose()?.unwrap_or(10_000),
        };
        if trajectories == 0 {
            return Err(invalid("trajectories must be at least 1"));
        }
        let seed = match flags.seed {
            Some(s) => s,
            None => match get("seed") {
                Some(v) => parse_one("seed", v)?,
                None => match env_seed {
                    Some(v) => parse_one(SEED_ENV, &v)?,
                    None => DEFAULT_SEED,
                },
            },
        };
        let alphas = match flags.alpha.as_deref().or(get("alpha")) {
            Some(v) => parse_list("alpha", v)?,
            None => vec![0.5, 1.0, 2.0],
        };
        if alphas.is_empty() || alphas.iter().any(|a: &f64| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("alpha values must be positive"));
        }
        let mu = match flags.mu.as_deref().or(get("mu")) {
            Some(v) => {
                let mu: Vec<f64> = parse_list("mu", v)?;
                InitialCondition::Product(mu.clone()).validate(&params).map_err(|e| invalid(e.to_string()))?;
                Some(mu)
            }
            None => None,
        };
        let initial = match parse_initial(flags.initial.as_deref().or(get("initial")).unwrap_or("step+"))? {
            "step+" => InitialCondition::Step(StepSign::Plus),
            "step-" => InitialCondition::Step(StepSign::Minus),
            _ => InitialCondition::Product(mu.clone().ok_or_else(|| invalid("product initial data needs --mu"))?),
        };
        let out = flags.out.clone().or(get("out").map(PathBuf::from));
        let tol_scale = match flags.tol_scale {
            Some(v) => v,
            None => get("tol-scale").map(|v| parse_one("tol-scale", v)).transpose()?.unwrap_or(1.0),
        };
        if !(tol_scale > 0.0 && tol_scale.is_finite()) {
            return Err(invalid("tol-scale must be positive"));
        }
        let workers = match flags.workers {
            Some(v) => Some(v),
            None => get("workers").map(|v| parse_one("workers", v)).transpose()?,
        };
        if workers == Some(0) {
            return Err(invalid("workers must be positive"));
        }
        let points = match flags.points {
            Some(v) => v,
            None => get("points").map(|v| parse_one("points", v)).transpose()?.unwrap_or(101),
        };
        if points < 2 {
            return Err(invalid("points must be at least 2"));
        }
        Ok(Self {
            params,
            length,
            boundary,
            times,
            bonds,
            trajectories,
            seed,
            alphas,
            mu,
            initial,
            out,
            tol_scale,
            workers,
            points,
            corrupt_rate: flags.corrupt_rate,
        })
    }
}
