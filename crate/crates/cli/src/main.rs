//! `sheetwalk`: Monte Carlo experiments on transport approximations of the
//! Brownian sheet.
//!
//! Every run writes `<out>/<subcommand>/<timestamp>/` containing
//! `results.csv`, `summary.json` and `manifest.json`; `sheetwalk replay
//! <manifest>` re-runs a recorded configuration.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "sheetwalk", version, about = "Transport approximations of the Brownian sheet")]
struct Cli {
    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    /// Worker threads: a positive integer or `auto`.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_threads)]
    threads: Threads,

    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand, Debug)]
enum Top {
    #[command(flatten)]
    Run(Command),
    /// Re-run the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "config", rename_all = "kebab-case")]
pub enum Command {
    /// Sup distance between transport paths and coupled Brownian motions.
    BmRate(BmRateArgs),
    /// Sheet sup error, its decomposition and tails against alpha n^-beta.
    SheetRate(SheetRateArgs),
    /// Empirical covariance of the approximating sheet.
    Covariance(CovarianceArgs),
    /// Orlicz norm of exp(N(0,1)) under psi(t) = t log+ t.
    Orlicz(OrliczArgs),
    /// Maximal-inequality ratios and exponential mean checks for the sheet.
    Maximal(MaximalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BmRate(_) => "bm-rate",
            Command::SheetRate(_) => "sheet-rate",
            Command::Covariance(_) => "covariance",
            Command::Orlicz(_) => "orlicz",
            Command::Maximal(_) => "maximal",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Command::BmRate(a) => a.seed,
            Command::SheetRate(a) => a.seed,
            Command::Covariance(a) => a.seed,
            Command::Orlicz(a) => a.seed,
            Command::Maximal(a) => a.seed,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmRateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated scales, e.g. `256,1024` or `2^8,2^10`.
    #[arg(long, value_delimiter = ',', value_parser = parse_n,
          default_value = "2^8,2^9,2^10,2^11,2^12,2^13,2^14,2^15,2^16")]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 500)]
    pub replicas: usize,
    #[arg(long = "t-grid", default_value_t = 2048)]
    pub t_grid: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetRateArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.19, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.08, allow_negative_numbers = true)]
    pub beta: f64,
    /// Threshold constant; defaults to twice the median error at the smallest n.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_n, default_value = "2^10,2^12,2^14,2^16")]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    #[arg(long = "t-grid", default_value_t = 1024)]
    pub t_grid: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.19, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, value_parser = parse_n, default_value = "2^14")]
    pub n: u64,
    #[arg(long, default_value_t = 2000)]
    pub replicas: usize,
    /// Point pair `s1,t1,s2,t2`; repeatable. Defaults to ten preset pairs.
    #[arg(long = "pair", value_parser = parse_pair)]
    pub pairs: Vec<PointPair>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrliczArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Monte Carlo samples for the cross-check (0 skips it).
    #[arg(long = "mc-samples", default_value_t = 10_000_000)]
    pub mc_samples: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "beta", value_delimiter = ',', default_value = "2,4,8,16")]
    pub betas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    /// Grid points per axis, axes included.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Replicas per rectangle for the exponential mean check (0 skips it).
    #[arg(long = "mean-replicas", default_value_t = 1_000_000)]
    pub mean_replicas: usize,
}

pub type PointPair = [f64; 4];

#[derive(Clone, Copy, Debug, PartialEq)]
enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        Ok(n) => Ok(Threads::Fixed(n)),
    }
}

/// `1024` or `2^10`.
fn parse_n(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let value = match s.split_once('^') {
        Some((base, exp)) => {
            let base: u64 = base.parse().map_err(|e| format!("bad base in `{s}`: {e}"))?;
            let exp: u32 = exp.parse().map_err(|e| format!("bad exponent in `{s}`: {e}"))?;
            base.checked_pow(exp).ok_or_else(|| format!("`{s}` overflows"))?
        }
        None => s.parse().map_err(|e| format!("bad integer `{s}`: {e}"))?,
    };
    if value == 0 {
        return Err("n must be positive".into());
    }
    Ok(value)
}

fn parse_pair(s: &str) -> Result<PointPair, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad coordinate `{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(v).map_err(|_| format!("expected s1,t1,s2,t2, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match cli.threads {
        Threads::Auto => 0,
        Threads::Fixed(n) => n,
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: cannot start worker pool: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Top::Run(command) => commands::execute(&command, &cli.out),
        Top::Replay { manifest } => commands::replay(&manifest, &cli.out),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
