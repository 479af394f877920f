//! Transport approximation of the Brownian sheet on `[0, 1]²`.
//!
//! The square is cut into `K = ⌊n^λ⌋` vertical strips of width `n^{-λ}`.
//! Strip `k` carries a telegraph path `X_k` and its coupled Brownian motion
//! `B_k`; the approximating sheet at the strip edges is
//!
//! ```text
//! W_n(l / n^λ, t) = Σ_{k ≤ l} n^{-λ/2} X_k(t)
//! ```
//!
//! linearly interpolated in `s` and frozen for `s ≥ K / n^λ`. The true sheet
//! uses `B_k` in place of `X_k` on the same strips. To see it between strip
//! edges each `B_k` is split into `m` independent sub-strip Brownian motions
//! whose scaled sum is `B_k` again.

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{couple_bm, CoupledBmPair};
use crate::error::{check, Error, Result};
use crate::rng::{derive_stream, RngStream};
use crate::stats;
use crate::transport::{build_telegraph, uniform_grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SheetConfig {
    pub n: u64,
    pub lambda: f64,
    /// Sub-strips per strip for the true sheet.
    pub m: usize,
    /// Points of the uniform time grid, endpoints included.
    pub t_grid_size: usize,
}

impl SheetConfig {
    pub fn new(n: u64, lambda: f64) -> Self {
        Self {
            n,
            lambda,
            m: 8,
            t_grid_size: 1024,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 0.2) {
            return Err(Error::LambdaOutOfRange(self.lambda));
        }
        check(self.n >= 1, "n", self.n as f64, "n >= 1")?;
        check(self.m >= 1, "m", self.m as f64, "m >= 1")?;
        check(self.t_grid_size >= 2, "t_grid_size", self.t_grid_size as f64, "at least 2 points")
    }

    /// `n^λ`, the reciprocal strip width.
    pub fn scale(&self) -> f64 {
        (self.n as f64).powf(self.lambda)
    }

    /// Number of strips `⌊n^λ⌋`.
    pub fn strips(&self) -> usize {
        (self.scale().floor() as usize).max(1)
    }
}

/// Coupled `(W_n, W)` on a refined strip grid.
#[derive(Clone, Debug)]
pub struct SheetGrid {
    config: SheetConfig,
    t_grid: Vec<f64>,
    s_grid: Vec<f64>,
    wn_strips: Vec<Vec<f64>>,
    w_values: Vec<Vec<f64>>,
    strip_pairs: Vec<CoupledBmPair>,
}

/// Refined s-grid `i / (m n^λ)`, `i = 0..=K m`, plus `1` when the last strip
/// edge falls short of it.
fn refined_s_grid(config: &SheetConfig) -> Vec<f64> {
    let k = config.strips();
    let step = 1.0 / (config.m as f64 * config.scale());
    let mut grid: Vec<f64> = (0..=k * config.m).map(|i| i as f64 * step).collect();
    if (k as f64) < config.scale() {
        grid.push(1.0);
    }
    grid
}

/// Standard Brownian motion on `t_grid`.
fn brownian_on_grid(t_grid: &[f64], stream: &mut RngStream) -> Vec<f64> {
    let mut w = Vec::with_capacity(t_grid.len());
    let mut acc = 0.0;
    let mut prev = t_grid[0];
    w.push(0.0);
    for &t in &t_grid[1..] {
        acc += (t - prev).sqrt() * stream.next_normal();
        prev = t;
        w.push(acc);
    }
    w
}

/// Split a standard Brownian motion `u` into `m` independent ones whose sum
/// over `sqrt(m)` is `u`. Halves are split as
/// `u_a = sqrt(a/m) u + sqrt(b/m) y`, `u_b = sqrt(b/m) u - sqrt(a/m) y`
/// with fresh `y`, keyed by the heap index of the split, so the split for
/// `m` refines the split for `m / 2` when `m` is a power of two.
pub fn split_brownian(u: &[f64], m: usize, t_grid: &[f64], stream: &RngStream) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(m);
    split_into(u.to_vec(), m, 1, t_grid, stream, &mut out);
    out
}

fn split_into(u: Vec<f64>, m: usize, node: u64, t_grid: &[f64], stream: &RngStream, out: &mut Vec<Vec<f64>>) {
    if m == 1 {
        out.push(u);
        return;
    }
    let (a, b) = (m - m / 2, m / 2);
    let (ca, cb) = ((a as f64 / m as f64).sqrt(), (b as f64 / m as f64).sqrt());
    let y = brownian_on_grid(t_grid, &mut stream.child(node));
    let ua = u.iter().zip(&y).map(|(u, y)| ca * u + cb * y).collect();
    let ub = u.iter().zip(&y).map(|(u, y)| cb * u - ca * y).collect();
    split_into(ua, a, 2 * node, t_grid, stream, out);
    split_into(ub, b, 2 * node + 1, t_grid, stream, out);
}

/// Cumulative strip sums `Σ_{k ≤ l} scale * rows[k]`, starting from a zero row.
fn cumulative(rows: &[Vec<f64>], scale: f64, width: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; width]];
    for row in rows {
        let last = out.last().unwrap();
        out.push(last.iter().zip(row).map(|(a, x)| a + scale * x).collect());
    }
    out
}

/// Build the coupled pair. Strip `k` draws its path from
/// `stream.child(k).child(0)`, its coupling from `.child(1)` and its
/// sub-strip split from `.child(2)`.
pub fn build_sheet_pair(config: &SheetConfig, stream: &RngStream) -> Result<SheetGrid> {
    config.validate()?;
    let t_grid = uniform_grid(config.t_grid_size);
    let k = config.strips();
    let strips: Vec<(CoupledBmPair, Vec<Vec<f64>>)> = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let s = stream.child(i);
            let path = build_telegraph(config.n, &mut s.child(0))?;
            let pair = couple_bm(&path, &s.child(1), &t_grid)?;
            let subs = split_brownian(pair.bm_values(), config.m, &t_grid, &s.child(2));
            Ok((pair, subs))
        })
        .collect::<Result<_>>()?;

    let strip_scale = config.scale().powf(-0.5);
    let transport: Vec<Vec<f64>> = strips
        .iter()
        .map(|(p, _)| p.path().eval_grid(&t_grid))
        .collect::<Result<_>>()?;
    let wn_strips = cumulative(&transport, strip_scale, t_grid.len());

    let sub_scale = strip_scale / (config.m as f64).sqrt();
    let subs: Vec<Vec<f64>> = strips.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
    let mut w_values = cumulative(&subs, sub_scale, t_grid.len());
    let s_grid = refined_s_grid(config);
    if s_grid.len() > w_values.len() {
        // frozen beyond the last strip edge
        w_values.push(w_values.last().unwrap().clone());
    }

    Ok(SheetGrid {
        config: *config,
        t_grid,
        s_grid,
        wn_strips,
        w_values,
        strip_pairs: strips.into_iter().map(|(p, _)| p).collect(),
    })
}

/// The degenerate grid whose true-sheet leg is `W_n` itself.
pub fn build_self_paired(config: &SheetConfig, stream: &RngStream) -> Result<SheetGrid> {
    config.validate()?;
    let t_grid = uniform_grid(config.t_grid_size);
    let strip_pairs: Vec<CoupledBmPair> = (0..config.strips() as u64)
        .map(|i| {
            let path = build_telegraph(config.n, &mut stream.child(i).child(0))?;
            CoupledBmPair::self_paired(path, t_grid.clone())
        })
        .collect::<Result<_>>()?;
    let transport: Vec<Vec<f64>> = strip_pairs.iter().map(|p| p.bm_values().to_vec()).collect();
    let wn_strips = cumulative(&transport, config.scale().powf(-0.5), t_grid.len());
    let mut grid = SheetGrid {
        config: *config,
        s_grid: refined_s_grid(config),
        t_grid,
        wn_strips,
        w_values: Vec::new(),
        strip_pairs,
    };
    grid.w_values = (0..grid.s_grid.len())
        .map(|i| (0..grid.t_grid.len()).map(|j| grid.wn_at(i, j)).collect())
        .collect();
    Ok(grid)
}

impl SheetGrid {
    pub fn config(&self) -> &SheetConfig {
        &self.config
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    /// Refined s-grid on which `W` is known.
    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    /// `W_n(l / n^λ, ·)` for `l = 0..=K`.
    pub fn wn_strips(&self) -> &[Vec<f64>] {
        &self.wn_strips
    }

    /// `W(s, ·)` for each `s` in the refined s-grid.
    pub fn w_values(&self) -> &[Vec<f64>] {
        &self.w_values
    }

    pub fn strip_pairs(&self) -> &[CoupledBmPair] {
        &self.strip_pairs
    }

    /// Strip index left of s-grid point `i` and the interpolation weight.
    fn locate(&self, i: usize) -> (usize, f64) {
        let m = self.config.m;
        let k = self.config.strips();
        if i >= k * m {
            (k, 0.0)
        } else {
            (i / m, (i % m) as f64 / m as f64)
        }
    }

    /// `W_n` at s-grid point `i` and t-grid point `j`.
    pub fn wn_at(&self, i: usize, j: usize) -> f64 {
        let (l, f) = self.locate(i);
        if f == 0.0 {
            return self.wn_strips[l][j];
        }
        (1.0 - f) * self.wn_strips[l][j] + f * self.wn_strips[l + 1][j]
    }

    /// `W_n(s, t_j)` for arbitrary `s ∈ [0, 1]`.
    pub fn interp_wn(&self, s: f64, j: usize) -> Result<f64> {
        interp_wn(self, s, j)
    }
}

/// `W_n(s, t_j)`: `(1 - f) W_n(l/n^λ) + f W_n((l+1)/n^λ)` with
/// `f = s n^λ - l`, frozen for `s ≥ K / n^λ`.
pub fn interp_wn(grid: &SheetGrid, s: f64, j: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            expected: "s in [0, 1]",
        });
    }
    check(j < grid.t_grid.len(), "t index", j as f64, "an index into the time grid")?;
    let k = grid.config.strips();
    let x = s * grid.config.scale();
    let l = x.floor() as usize;
    if l >= k {
        return Ok(grid.wn_strips[k][j]);
    }
    let f = x - l as f64;
    Ok((1.0 - f) * grid.wn_strips[l][j] + f * grid.wn_strips[l + 1][j])
}

/// The three terms bounding the sheet error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorDecomposition {
    /// Interpolation error `|W_n(s, t) - W_n(⌊s n^λ⌋ / n^λ, t)|`.
    pub p1: f64,
    /// Coupling error at strip edges.
    pub p2: f64,
    /// Sheet oscillation inside a strip `|W(⌊s n^λ⌋ / n^λ, t) - W(s, t)|`.
    pub p3: f64,
}

/// Max of the three terms, together with the max of `|W_n - W|`, over the
/// refined grid. The pointwise error is evaluated as the sum of the three
/// signed terms, so `sup <= p1 + p2 + p3` holds in floating point as well.
pub fn decompose(grid: &SheetGrid) -> (f64, ErrorDecomposition) {
    let m = grid.config.m;
    let mut sup = 0.0f64;
    let mut d = ErrorDecomposition {
        p1: 0.0,
        p2: 0.0,
        p3: 0.0,
    };
    for (i, w_row) in grid.w_values.iter().enumerate() {
        let (l, _) = grid.locate(i);
        let left = &grid.wn_strips[l];
        let w_left = &grid.w_values[(l * m).min(grid.w_values.len() - 1)];
        for (j, &w) in w_row.iter().enumerate() {
            let a = grid.wn_at(i, j) - left[j];
            let b = left[j] - w_left[j];
            let c = w_left[j] - w;
            d.p1 = d.p1.max(a.abs());
            d.p2 = d.p2.max(b.abs());
            d.p3 = d.p3.max(c.abs());
            sup = sup.max((a + b + c).abs());
        }
    }
    (sup, d)
}

pub fn sup_error(grid: &SheetGrid) -> f64 {
    decompose(grid).0
}

pub fn error_decomposition(grid: &SheetGrid) -> ErrorDecomposition {
    decompose(grid).1
}

/// One row of a covariance check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceRow {
    pub s1: f64,
    pub t1: f64,
    pub s2: f64,
    pub t2: f64,
    pub empirical: f64,
    pub exact: f64,
    pub stderr: f64,
}

pub(crate) const COVARIANCE_TAG: u64 = 3;

/// Empirical `E[W_n(s1, t1) W_n(s2, t2)]` against `(s1 ∧ s2)(t1 ∧ t2)`.
/// `W_n` is evaluated exactly at the requested points.
pub fn covariance_check(
    config: &SheetConfig,
    replicas: usize,
    pairs: &[((f64, f64), (f64, f64))],
    master_seed: u64,
) -> Result<Vec<CovarianceRow>> {
    config.validate()?;
    check(replicas >= 1000, "replicas", replicas as f64, "at least 1000 replicas")?;
    for &((s1, t1), (s2, t2)) in pairs {
        for v in [s1, t1, s2, t2] {
            check((0.0..=1.0).contains(&v), "point coordinate", v, "coordinates in [0, 1]")?;
        }
    }
    let products: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let stream = derive_stream(master_seed, &[COVARIANCE_TAG, config.n, r]);
            let paths = (0..config.strips() as u64)
                .map(|i| build_telegraph(config.n, &mut stream.child(i).child(0)))
                .collect::<Result<Vec<_>>>()?;
            let wn = |s: f64, t: f64| -> Result<f64> { wn_exact(config, &paths, s, t) };
            pairs
                .iter()
                .map(|&((s1, t1), (s2, t2))| Ok(wn(s1, t1)? * wn(s2, t2)?))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, &((s1, t1), (s2, t2)))| {
            let xs: Vec<f64> = products.iter().map(|row| row[p]).collect();
            CovarianceRow {
                s1,
                t1,
                s2,
                t2,
                empirical: stats::mean(&xs),
                exact: s1.min(s2) * t1.min(t2),
                stderr: stats::std_error(&xs),
            }
        })
        .collect())
}

/// `W_n(s, t)` from strip paths by exact evaluation.
pub fn wn_exact(config: &SheetConfig, paths: &[crate::transport::TelegraphPath], s: f64, t: f64) -> Result<f64> {
    let scale = config.scale();
    let k = paths.len();
    let x = s * scale;
    let l = (x.floor() as usize).min(k);
    let f = if l >= k { 0.0 } else { x - l as f64 };
    let mut left = 0.0;
    for p in &paths[..l] {
        left += p.eval(t)?;
    }
    let mut value = left;
    if f > 0.0 {
        value += f * paths[l].eval(t)?;
    }
    Ok(value / scale.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: u64, m: usize) -> SheetConfig {
        SheetConfig {
            n,
            lambda: 0.19,
            m,
            t_grid_size: 129,
        }
    }

    #[test]
    fn strip_counts() {
        assert_eq!(SheetConfig::new(1024, 0.19).strips(), 3);
        assert_eq!(SheetConfig::new(1 << 12, 0.19).strips(), 4);
        assert_eq!(SheetConfig::new(1 << 14, 0.19).strips(), 6);
        assert_eq!(SheetConfig::new(1 << 16, 0.19).strips(), 8);
    }

    #[test]
    fn rejects_lambda_outside_range() {
        for lambda in [0.0, 0.2, 0.3, -0.1] {
            assert_eq!(SheetConfig::new(1024, lambda).validate(), Err(Error::LambdaOutOfRange(lambda)));
        }
        let mut c = SheetConfig::new(1024, 0.1);
        c.m = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn boundaries_vanish() {
        let g = build_sheet_pair(&config(1024, 4), &derive_stream(1, &[])).unwrap();
        for row in g.w_values() {
            assert_eq!(row[0], 0.0);
        }
        assert!(g.w_values()[0].iter().all(|&v| v == 0.0));
        assert!(g.wn_strips()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn split_reconstructs() {
        let t = uniform_grid(65);
        let mut s = derive_stream(3, &[]);
        let u = brownian_on_grid(&t, &mut s);
        for m in [1, 2, 3, 5, 8] {
            let subs = split_brownian(&u, m, &t, &s.child(7));
            assert_eq!(subs.len(), m);
            for j in 0..t.len() {
                let sum: f64 = subs.iter().map(|v| v[j]).sum::<f64>() / (m as f64).sqrt();
                assert!((sum - u[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_endpoints_and_midpoints() {
        let c = config(4096, 2);
        let g = build_sheet_pair(&c, &derive_stream(5, &[])).unwrap();
        let scale = c.scale();
        for j in [0, 17, 128] {
            for l in 0..=c.strips() {
                let s = (l as f64 / scale).min(1.0);
                assert!((interp_wn(&g, s, j).unwrap() - g.wn_strips()[l][j]).abs() < 1e-12);
            }
            let mid = 1.5 / scale;
            let avg = 0.5 * (g.wn_strips()[1][j] + g.wn_strips()[2][j]);
            assert!((interp_wn(&g, mid, j).unwrap() - avg).abs() < 1e-12);
            assert_eq!(interp_wn(&g, 1.0, j).unwrap(), g.wn_strips()[c.strips()][j]);
        }
        assert!(interp_wn(&g, 1.5, 0).is_err());
        assert!(interp_wn(&g, -0.1, 0).is_err());
    }

    #[test]
    fn self_paired_has_zero_error() {
        let g = build_self_paired(&config(1024, 4), &derive_stream(9, &[])).unwrap();
        let (sup, d) = decompose(&g);
        assert_eq!(sup, 0.0);
        assert_eq!(d.p2, 0.0);
    }

    #[test]
    fn single_substrip_has_no_p3() {
        let g = build_sheet_pair(&config(1024, 1), &derive_stream(2, &[])).unwrap();
        assert_eq!(error_decomposition(&g).p3, 0.0);
    }

    #[test]
    fn refining_substrips_never_lowers_sup() {
        for seed in 0..4 {
            let coarse = build_sheet_pair(&config(1024, 4), &derive_stream(seed, &[])).unwrap();
            let fine = build_sheet_pair(&config(1024, 8), &derive_stream(seed, &[])).unwrap();
            for (i, row) in coarse.w_values().iter().enumerate() {
                let fine_row = if i < coarse.w_values().len() - 1 || coarse.s_grid()[i] < 1.0 {
                    &fine.w_values()[2 * i]
                } else {
                    fine.w_values().last().unwrap()
                };
                for (a, b) in row.iter().zip(fine_row) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            assert!(sup_error(&fine) >= sup_error(&coarse) - 1e-12);
        }
    }

    #[test]
    fn wn_exact_matches_grid() {
        let c = config(4096, 4);
        let stream = derive_stream(11, &[]);
        let g = build_sheet_pair(&c, &stream).unwrap();
        let paths: Vec<_> = g.strip_pairs().iter().map(|p| p.path().clone()).collect();
        for (i, &s) in g.s_grid().iter().enumerate() {
            for j in [0, 40, 128] {
                let exact = wn_exact(&c, &paths, s, g.t_grid()[j]).unwrap();
                assert!((exact - g.wn_at(i, j)).abs() < 1e-12, "i={i} j={j}");
            }
        }
    }
}
