//! Monte Carlo rate experiments for the sheet approximation.
//!
//! For each `n` the harness builds independent coupled sheets, records
//! `sup |W_n - W|` and its three-term decomposition, estimates the tail
//! `P(sup > α n^{-β})`, and fits a log-log line to the median error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::rng::derive_stream;
use crate::sheet::{build_sheet_pair, decompose, SheetConfig};
use crate::stats::{self, ols};

pub use crate::stats::LineFit as RateFit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentConfig {
    pub lambda: f64,
    /// Rate exponent in the threshold `α n^{-β}`; needs `0 < β < λ/2`.
    pub beta: f64,
    /// Threshold constant; `None` picks twice the median error at the
    /// smallest `n`.
    pub alpha: Option<f64>,
    pub n_list: Vec<u64>,
    pub replicas: usize,
    pub m: usize,
    pub t_grid_size: usize,
    pub master_seed: u64,
}

impl Default for RateExperimentConfig {
    fn default() -> Self {
        Self {
            lambda: 0.19,
            beta: 0.08,
            alpha: None,
            n_list: vec![1 << 10, 1 << 12, 1 << 14, 1 << 16],
            replicas: 200,
            m: 8,
            t_grid_size: 1024,
            master_seed: 42,
        }
    }
}

impl RateExperimentConfig {
    pub fn sheet_config(&self, n: u64) -> SheetConfig {
        SheetConfig {
            n,
            lambda: self.lambda,
            m: self.m,
            t_grid_size: self.t_grid_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 0.2) {
            return Err(Error::LambdaOutOfRange(self.lambda));
        }
        if !(self.beta > 0.0 && self.beta < self.lambda / 2.0) {
            return Err(Error::BetaOutOfRange {
                beta: self.beta,
                lambda: self.lambda,
            });
        }
        if let Some(alpha) = self.alpha {
            check(alpha > 0.0, "alpha", alpha, "alpha > 0")?;
        }
        if self.n_list.is_empty() {
            return Err(Error::Empty("n list"));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Unsorted("n list"));
        }
        check(self.replicas >= 1, "replicas", self.replicas as f64, "at least one replica")?;
        self.sheet_config(self.n_list[0]).validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub n: u64,
    pub threshold: f64,
    pub tail: f64,
    pub stderr: f64,
}

/// Fraction of `errors` strictly above `threshold`, with its binomial
/// standard error.
pub fn tail_probability(errors: &[f64], threshold: f64) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::Empty("error sample"));
    }
    let n = errors.len() as f64;
    let tail = errors.iter().filter(|&&e| e > threshold).count() as f64 / n;
    Ok((tail, (tail * (1.0 - tail) / n).sqrt()))
}

/// OLS of `log value` on `log n`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    for &(n, v) in points {
        check(n > 0.0, "n", n, "n > 0")?;
        check(v > 0.0, "value", v, "positive values (log is taken)")?;
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter {
            name: "n",
            value: ns.len() as f64,
            expected: "distinct n values",
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    ols(&xs, &ys)
}

/// One replica of one `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SheetRecord {
    pub n: u64,
    pub lambda: f64,
    pub m: usize,
    pub replica: usize,
    pub sup_error: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub seed: u64,
}

/// Per-`n` summary row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: u64,
    pub lambda: f64,
    pub beta: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub tail: f64,
    pub stderr: f64,
    pub median_sup: f64,
    pub q90_sup: f64,
    pub median_p1: f64,
    pub median_p2: f64,
    pub median_p3: f64,
}

impl RateRow {
    pub fn tail_estimate(&self) -> TailEstimate {
        TailEstimate {
            n: self.n,
            threshold: self.threshold,
            tail: self.tail,
            stderr: self.stderr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateExperiment {
    pub alpha: f64,
    pub records: Vec<SheetRecord>,
    pub rows: Vec<RateRow>,
    /// Fit of the median sup error against `n`.
    pub fit: RateFit,
    /// Fit of the 0.9-quantile.
    pub fit_q90: RateFit,
}

pub(crate) const SHEET_TAG: u64 = 2;

/// Sheet sup errors and decompositions for `replicas` replicas at `n`.
pub fn sheet_records(config: &SheetConfig, replicas: usize, master_seed: u64) -> Result<Vec<SheetRecord>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let grid = build_sheet_pair(config, &derive_stream(master_seed, &[SHEET_TAG, config.n, r as u64]))?;
            let (sup, d) = decompose(&grid);
            Ok(SheetRecord {
                n: config.n,
                lambda: config.lambda,
                m: config.m,
                replica: r,
                sup_error: sup,
                p1: d.p1,
                p2: d.p2,
                p3: d.p3,
                seed: master_seed,
            })
        })
        .collect()
}

pub fn sheet_rate_experiment(config: &RateExperimentConfig) -> Result<RateExperiment> {
    config.validate()?;
    let per_n: Vec<Vec<SheetRecord>> = config
        .n_list
        .iter()
        .map(|&n| sheet_records(&config.sheet_config(n), config.replicas, config.master_seed))
        .collect::<Result<_>>()?;
    let column = |recs: &[SheetRecord], f: fn(&SheetRecord) -> f64| recs.iter().map(f).collect::<Vec<f64>>();
    let alpha = config
        .alpha
        .unwrap_or_else(|| 2.0 * stats::median(&column(&per_n[0], |r| r.sup_error)));

    let rows: Vec<RateRow> = config
        .n_list
        .iter()
        .zip(&per_n)
        .map(|(&n, recs)| {
            let sups = stats::sorted(&column(recs, |r| r.sup_error));
            let threshold = alpha * (n as f64).powf(-config.beta);
            let (tail, stderr) = tail_probability(&sups, threshold)?;
            Ok(RateRow {
                n,
                lambda: config.lambda,
                beta: config.beta,
                alpha,
                threshold,
                tail,
                stderr,
                median_sup: stats::quantile_sorted(&sups, 0.5),
                q90_sup: stats::quantile_sorted(&sups, 0.9),
                median_p1: stats::median(&column(recs, |r| r.p1)),
                median_p2: stats::median(&column(recs, |r| r.p2)),
                median_p3: stats::median(&column(recs, |r| r.p3)),
            })
        })
        .collect::<Result<_>>()?;

    let points = |f: fn(&RateRow) -> f64| rows.iter().map(|r| (r.n as f64, f(r))).collect::<Vec<_>>();
    let fit = fit_rate(&points(|r| r.median_sup))?;
    let fit_q90 = fit_rate(&points(|r| r.q90_sup))?;
    Ok(RateExperiment {
        alpha,
        records: per_n.into_iter().flatten().collect(),
        rows,
        fit,
        fit_q90,
    })
}
