use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sheetwalk::coupling::{bm_rate_experiment, BmRateRow};
use sheetwalk::maximal::{
    exp_sheet_mean_check, expected_psi_monte_carlo, imkeller_ratio_experiment, orlicz_norm_exp_gaussian,
    MeanCheck, Method, RatioRow,
};
use sheetwalk::rates::{fit_rate, sheet_rate_experiment, RateExperimentConfig, RateFit};
use sheetwalk::sheet::{covariance_check, SheetConfig};

use crate::output::{create_run_dir, write_csv, write_json, RunManifest};
use crate::{BmRateArgs, Command, CovarianceArgs, MaximalArgs, OrliczArgs, PointPair, SheetRateArgs};

#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration; exit status 2.
    Config(String),
    Runtime(anyhow::Error),
}

impl From<sheetwalk::Error> for Failure {
    fn from(e: sheetwalk::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Files of one finished run, written after the computation succeeds.
struct Outputs {
    csv: Vec<(&'static str, Box<dyn Fn(&Path) -> anyhow::Result<()>>)>,
    summary: serde_json::Value,
}

fn csv_file<T: Serialize + 'static>(name: &'static str, rows: Vec<T>) -> (&'static str, Box<dyn Fn(&Path) -> anyhow::Result<()>>) {
    (name, Box::new(move |p: &Path| write_csv(p, &rows)))
}

pub const PRESET_PAIRS: [PointPair; 10] = [
    [1.0, 1.0, 1.0, 1.0],
    [0.5, 1.0, 1.0, 1.0],
    [0.5, 0.5, 0.5, 0.5],
    [0.25, 0.75, 0.6, 0.4],
    [0.3, 1.0, 0.8, 0.5],
    [1.0, 0.5, 1.0, 0.25],
    [0.9, 0.3, 0.45, 0.6],
    [0.7, 0.7, 0.2, 0.9],
    [0.15, 1.0, 0.15, 1.0],
    [0.0, 0.5, 1.0, 1.0],
];

/// Rectangles `(s, t), (s', t')` for the exponential mean check; all on the
/// 11-point grid.
pub const PRESET_RECTANGLES: [[f64; 4]; 5] = [
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 1.0, 0.5, 0.5],
    [0.8, 0.6, 0.4, 0.3],
    [0.5, 1.0, 0.5, 0.2],
    [1.0, 0.7, 0.3, 0.7],
];
const MEAN_GRID: usize = 11;

pub fn execute(command: &Command, root: &Path) -> Result<PathBuf, Failure> {
    let started = timestamp();
    let outputs = match command {
        Command::BmRate(a) => bm_rate(a)?,
        Command::SheetRate(a) => sheet_rate(a)?,
        Command::Covariance(a) => covariance(a)?,
        Command::Orlicz(a) => orlicz(a)?,
        Command::Maximal(a) => maximal(a)?,
    };
    let stamp = started.replace([':', '-'], "");
    let dir = create_run_dir(root, command.name(), &stamp)?;
    let mut files = Vec::new();
    for (name, write) in &outputs.csv {
        write(&dir.join(name))?;
        files.push(name.to_string());
    }
    write_json(&dir.join("summary.json"), &outputs.summary)?;
    files.push("summary.json".into());
    files.push("manifest.json".into());
    let manifest = RunManifest {
        subcommand: command.name().into(),
        command: command.clone(),
        master_seed: command.seed(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        threads: rayon::current_num_threads(),
        started,
        finished: timestamp(),
        outputs: files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(dir)
}

pub fn replay(manifest: &Path, root: &Path) -> Result<PathBuf, Failure> {
    let m = RunManifest::load(manifest).map_err(|e| Failure::Config(format!("{e:#}")))?;
    execute(&m.command, root)
}

fn timestamp() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<serde_json::Value> {
    serde_json::to_value(v).context("serializing summary")
}

fn bm_rate(a: &BmRateArgs) -> Result<Outputs, Failure> {
    if a.t_grid < 2 {
        return Err(Failure::Config("--t-grid needs at least 2 points".into()));
    }
    let rows: Vec<BmRateRow> = bm_rate_experiment(&a.n, a.replicas, a.seed, a.t_grid)?;
    let fit = if rows.len() >= 3 {
        Some(fit_rate(&rows.iter().map(|r| (r.n as f64, r.median)).collect::<Vec<_>>())?)
    } else {
        None
    };
    #[derive(Serialize)]
    struct Summary<'a> {
        rows: &'a [BmRateRow],
        median_fit: Option<RateFit>,
    }
    let summary = to_json(&Summary {
        rows: &rows,
        median_fit: fit,
    })?;
    Ok(Outputs {
        csv: vec![csv_file("results.csv", rows)],
        summary,
    })
}

fn sheet_rate(a: &SheetRateArgs) -> Result<Outputs, Failure> {
    let config = RateExperimentConfig {
        lambda: a.lambda,
        beta: a.beta,
        alpha: a.alpha,
        n_list: a.n.clone(),
        replicas: a.replicas,
        m: a.m,
        t_grid_size: a.t_grid,
        master_seed: a.seed,
    };
    config.validate()?;
    let run = sheet_rate_experiment(&config)?;
    let fit_of = |f: fn(&sheetwalk::rates::RateRow) -> f64| {
        fit_rate(&run.rows.iter().map(|r| (r.n as f64, f(r))).collect::<Vec<_>>()).ok()
    };
    #[derive(Serialize)]
    struct Summary {
        alpha: f64,
        median_fit: RateFit,
        q90_fit: RateFit,
        p2_fit: Option<RateFit>,
        p3_fit: Option<RateFit>,
        tails: Vec<sheetwalk::rates::TailEstimate>,
    }
    let summary = to_json(&Summary {
        alpha: run.alpha,
        median_fit: run.fit,
        q90_fit: run.fit_q90,
        p2_fit: fit_of(|r| r.median_p2),
        p3_fit: fit_of(|r| r.median_p3),
        tails: run.rows.iter().map(|r| r.tail_estimate()).collect(),
    })?;
    Ok(Outputs {
        csv: vec![csv_file("results.csv", run.rows), csv_file("records.csv", run.records)],
        summary,
    })
}

fn covariance(a: &CovarianceArgs) -> Result<Outputs, Failure> {
    let config = SheetConfig::new(a.n, a.lambda);
    config.validate()?;
    let pairs: Vec<PointPair> = if a.pairs.is_empty() {
        PRESET_PAIRS.to_vec()
    } else {
        a.pairs.clone()
    };
    let points: Vec<_> = pairs.iter().map(|p| ((p[0], p[1]), (p[2], p[3]))).collect();
    let rows = covariance_check(&config, a.replicas, &points, a.seed)?;
    let max_z = rows
        .iter()
        .filter(|r| r.stderr > 0.0)
        .map(|r| ((r.empirical - r.exact) / r.stderr).abs())
        .fold(0.0, f64::max);
    let summary = serde_json::json!({
        "n": a.n,
        "lambda": a.lambda,
        "strips": config.strips(),
        "replicas": a.replicas,
        "max_abs_z": max_z,
        "rows": to_json(&rows)?,
    });
    Ok(Outputs {
        csv: vec![csv_file("results.csv", rows)],
        summary,
    })
}

fn orlicz(a: &OrliczArgs) -> Result<Outputs, Failure> {
    let r = orlicz_norm_exp_gaussian(a.tol)?;
    #[derive(Serialize)]
    struct Row {
        mu_star: f64,
        residual: f64,
        tolerance: f64,
        method: Method,
        mc_samples: usize,
        mc_mean: Option<f64>,
        mc_stderr: Option<f64>,
    }
    let (mc_mean, mc_stderr) = if a.mc_samples >= 2 {
        let (m, s) = expected_psi_monte_carlo(r.mu_star, a.mc_samples, a.seed);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let row = Row {
        mu_star: r.mu_star,
        residual: r.residual,
        tolerance: r.tolerance,
        method: r.method,
        mc_samples: a.mc_samples,
        mc_mean,
        mc_stderr,
    };
    let summary = to_json(&row)?;
    Ok(Outputs {
        csv: vec![csv_file("results.csv", vec![row])],
        summary,
    })
}

fn maximal(a: &MaximalArgs) -> Result<Outputs, Failure> {
    let norm = orlicz_norm_exp_gaussian(1e-9)?;
    let ratios: Vec<RatioRow> = imkeller_ratio_experiment(&a.betas, a.replicas, a.grid, a.seed)?;
    let means: Vec<MeanCheck> = if a.mean_replicas > 0 {
        PRESET_RECTANGLES
            .iter()
            .map(|r| exp_sheet_mean_check((r[0], r[1]), (r[2], r[3]), a.mean_replicas, MEAN_GRID, a.seed))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let summary = serde_json::json!({
        "mu_star": norm.mu_star,
        "residual": norm.residual,
        "ratios": ratios
            .iter()
            .map(|r| serde_json::json!({"beta": r.beta, "tail": r.tail, "ratio": r.ratio}))
            .collect::<Vec<_>>(),
        "mean_checks": to_json(&means)?,
    });
    let mut csv = vec![csv_file("results.csv", ratios)];
    if !means.is_empty() {
        csv.push(csv_file("means.csv", means));
    }
    Ok(Outputs { csv, summary })
}
