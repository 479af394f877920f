//! Orlicz norm of `exp(N(0, 1))` under `ψ(t) = t log⁺ t`, and Monte Carlo
//! checks of the maximal inequality for `exp` of a Brownian sheet.
//!
//! For `M(s, t) = exp(B(s, t))` the two-parameter maximal inequality reads
//! `P(max |M| > β) ≤ (c / β) ‖M(1, 1)‖_ψ`. Quadrature gives the norm; the
//! Monte Carlo side estimates the tail on a grid and reports `β · tail / μ*`,
//! which must stay bounded as `β` grows.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check, Error, Result};
use crate::quadrature::integrate;
use crate::rng::derive_stream;
use crate::special::{normal_cdf, normal_pdf};
use crate::stats;

const QUAD_TOL: f64 = 1e-9;
const TAIL_CUTOFF: f64 = 40.0;

/// `ψ(t) = t log⁺ t`.
pub fn psi(t: f64) -> Result<f64> {
    check(t >= 0.0, "t", t, "t >= 0")?;
    Ok(if t > 1.0 { t * t.ln() } else { 0.0 })
}

/// `E ψ(e^Z / μ)` for standard normal `Z`, by adaptive quadrature of
/// `∫_{log μ}^{∞} (e^x / μ)(x - log μ) φ(x) dx`, truncated at `log μ + 40`.
pub fn expected_psi_exp_gaussian(mu: f64) -> f64 {
    let lm = mu.ln();
    // the integrand peaks near x = 1; split there so the panels see it
    let f = |x: f64| (x - lm) * (x - lm).exp() * normal_pdf(x);
    let (a, b) = (lm, lm + TAIL_CUTOFF);
    let mid = 1.0f64.clamp(a, b);
    integrate(f, a, mid, 0.5 * QUAD_TOL) + integrate(f, mid, b, 0.5 * QUAD_TOL)
}

/// Closed form of [`expected_psi_exp_gaussian`]:
/// `(e^{1/2} / μ)(φ(m) + m Φ(m))` with `m = 1 - log μ`.
pub fn expected_psi_closed_form(mu: f64) -> f64 {
    let m = 1.0 - mu.ln();
    0.5f64.exp() / mu * (normal_pdf(m) + m * normal_cdf(m))
}

/// The frequently quoted form
/// `(2π)^{-1/2} (e^{1/2} / μ)(e^{-m²/2} + m (π/2)^{1/2})`, which replaces
/// `√(2π) Φ(m)` by `√(π/2)`. Agrees with the integral only at `m = 0`.
pub fn expected_psi_quoted_form(mu: f64) -> f64 {
    let m = 1.0 - mu.ln();
    0.5f64.exp() / mu * (normal_pdf(m) + m * std::f64::consts::FRAC_PI_2.sqrt() * normal_pdf(0.0))
}

/// `∫_0^∞ x e^{-(x - m)²/2} dx` by quadrature.
pub fn gaussian_tail_integral(m: f64) -> f64 {
    let f = |x: f64| x * (-0.5 * (x - m) * (x - m)).exp();
    let peak = m.max(0.0);
    integrate(f, 0.0, peak, 0.5 * QUAD_TOL) + integrate(f, peak, peak + TAIL_CUTOFF, 0.5 * QUAD_TOL)
}

/// `e^{-m²/2} + m √(2π) Φ(m)`.
pub fn gaussian_tail_closed_form(m: f64) -> f64 {
    (-0.5 * m * m).exp() + m * (2.0 * std::f64::consts::PI).sqrt() * normal_cdf(m)
}

/// `e^{-m²/2} + m (π/2)^{1/2}`, the quoted form.
pub fn gaussian_tail_quoted_form(m: f64) -> f64 {
    (-0.5 * m * m).exp() + m * std::f64::consts::FRAC_PI_2.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrliczNormResult {
    pub mu_star: f64,
    /// `E ψ(e^Z / μ*) - 1`.
    pub residual: f64,
    pub method: Method,
    pub tolerance: f64,
}

const BRACKET: (f64, f64) = (0.25, 8.0);

/// `‖e^Z‖_ψ`: the root of `E ψ(e^Z / μ) = 1`, by bisection on the
/// quadrature. The map is first checked to be strictly decreasing at 100
/// points of the bracket.
pub fn orlicz_norm_exp_gaussian(tolerance: f64) -> Result<OrliczNormResult> {
    check(tolerance > 0.0, "tolerance", tolerance, "tolerance > 0")?;
    let (mut lo, mut hi) = BRACKET;
    let g = |mu: f64| expected_psi_exp_gaussian(mu) - 1.0;
    let mut prev = f64::INFINITY;
    for i in 0..100 {
        let mu = lo + (hi - lo) * i as f64 / 99.0;
        let v = g(mu);
        if v >= prev {
            return Err(Error::NotMonotone(mu));
        }
        prev = v;
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::NotBracketed {
            lo,
            hi,
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    let mut residual = g(mid);
    for _ in 0..200 {
        if residual.abs() <= 1e-3 * tolerance || hi - lo <= f64::EPSILON * mid {
            break;
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        residual = g(mid);
    }
    Ok(OrliczNormResult {
        mu_star: mid,
        residual,
        method: Method::Quadrature,
        tolerance,
    })
}

pub(crate) const ORLICZ_MC_TAG: u64 = 4;
const MC_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of `E ψ(e^Z / μ)` with its standard error.
pub fn expected_psi_monte_carlo(mu: f64, samples: usize, master_seed: u64) -> (f64, f64) {
    let lm = mu.ln();
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = derive_stream(master_seed, &[ORLICZ_MC_TAG, c as u64]);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            (0..len).fold((0.0, 0.0), |(a, b), _| {
                let z = s.next_normal();
                let v = if z > lm { (z - lm).exp() * (z - lm) } else { 0.0 };
                (a + v, b + v * v)
            })
        })
        .collect();
    let (sum, sq) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Grid Brownian sheet on `points × points` nodes `i / (points - 1)`
/// including both axes, built from cell normals by tensor cumulative sums.
#[derive(Clone, Debug)]
pub struct GridSheet {
    points: usize,
    values: Vec<f64>,
}

impl GridSheet {
    pub fn simulate(points: usize, stream: &mut crate::rng::RngStream) -> Self {
        let mut values = vec![0.0; points * points];
        let cell = 1.0 / (points - 1) as f64;
        for i in 1..points {
            for j in 1..points {
                let z = cell * stream.next_normal();
                values[i * points + j] =
                    values[(i - 1) * points + j] + values[i * points + j - 1] - values[(i - 1) * points + j - 1] + z;
            }
        }
        Self { points, values }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `B(i / (points - 1), j / (points - 1))`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.points + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) const MAXIMAL_TAG: u64 = 5;

/// `max_grid B` for each replica.
pub fn sheet_maxima(replicas: usize, grid_size: usize, master_seed: u64) -> Result<Vec<f64>> {
    check(grid_size >= 2, "grid_size", grid_size as f64, "at least 2 points per axis")?;
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|r| GridSheet::simulate(grid_size, &mut derive_stream(master_seed, &[MAXIMAL_TAG, r])).max())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub beta: f64,
    pub tail: f64,
    pub stderr: f64,
    /// `β · tail / μ*`.
    pub ratio: f64,
}

/// Empirical `P(max_grid e^{B} > β)` and `β · tail / μ*` for each `β`.
pub fn imkeller_ratio_experiment(
    beta_list: &[f64],
    replicas: usize,
    grid_size: usize,
    master_seed: u64,
) -> Result<Vec<RatioRow>> {
    if beta_list.is_empty() {
        return Err(Error::Empty("beta list"));
    }
    for &b in beta_list {
        check(b > 0.0, "beta", b, "beta > 0")?;
    }
    check(replicas >= 1000, "replicas", replicas as f64, "at least 1000 replicas")?;
    let mu_star = orlicz_norm_exp_gaussian(1e-9)?.mu_star;
    let maxima = sheet_maxima(replicas, grid_size, master_seed)?;
    Ok(ratio_rows(beta_list, &maxima, mu_star))
}

pub fn ratio_rows(beta_list: &[f64], maxima: &[f64], mu_star: f64) -> Vec<RatioRow> {
    beta_list
        .iter()
        .map(|&beta| {
            let level = beta.ln();
            let hits = maxima.iter().filter(|&&m| m > level).count();
            let tail = hits as f64 / maxima.len() as f64;
            RatioRow {
                beta,
                tail,
                stderr: (tail * (1.0 - tail) / maxima.len() as f64).sqrt(),
                ratio: beta * tail / mu_star,
            }
        })
        .collect()
}

/// Mean of `exp(B(s, t) - B(s', t'))` against `exp((st - s't')/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanCheck {
    pub s: f64,
    pub t: f64,
    pub s0: f64,
    pub t0: f64,
    pub empirical: f64,
    pub stderr: f64,
    /// `exp(Var / 2)` with `Var = st - s't'`.
    pub target: f64,
    /// The exponent `(t t' - s s') / 2` of the quoted identity.
    pub quoted_exponent: f64,
    /// Whether the quoted exponent differs from `Var / 2`.
    pub quoted_differs: bool,
}

pub(crate) const MEAN_TAG: u64 = 6;

/// Points must lie on the grid `i / (points - 1)` and satisfy
/// `s' ≤ s`, `t' ≤ t`.
pub fn exp_sheet_mean_check(
    (s, t): (f64, f64),
    (s0, t0): (f64, f64),
    replicas: usize,
    points: usize,
    master_seed: u64,
) -> Result<MeanCheck> {
    check(points >= 2, "points", points as f64, "at least 2 points per axis")?;
    let cells = (points - 1) as f64;
    let index = |v: f64| -> Result<usize> {
        let i = (v * cells).round();
        check(
            (0.0..=1.0).contains(&v) && (v * cells - i).abs() < 1e-9,
            "sheet point",
            v,
            "a coordinate on the simulation grid",
        )?;
        Ok(i as usize)
    };
    let (i, j, i0, j0) = (index(s)?, index(t)?, index(s0)?, index(t0)?);
    check(i0 <= i && j0 <= j, "s', t'", s0, "(s', t') <= (s, t) componentwise")?;
    let tag = [MEAN_TAG, i as u64, j as u64, i0 as u64, j0 as u64];
    let values: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut path = tag.to_vec();
            path.push(r);
            let sheet = GridSheet::simulate(points, &mut derive_stream(master_seed, &path));
            (sheet.at(i, j) - sheet.at(i0, j0)).exp()
        })
        .collect();
    let var = s * t - s0 * t0;
    let quoted_exponent = 0.5 * (t * t0 - s * s0);
    Ok(MeanCheck {
        s,
        t,
        s0,
        t0,
        empirical: stats::mean(&values),
        stderr: stats::std_error(&values),
        target: (0.5 * var).exp(),
        quoted_exponent,
        quoted_differs: (quoted_exponent - 0.5 * var).abs() > 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_values() {
        assert_eq!(psi(1.0).unwrap(), 0.0);
        assert_eq!(psi(0.5).unwrap(), 0.0);
        assert!((psi(std::f64::consts::E).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!(psi(-1.0).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for mu in [1e-3, 0.1, 0.5, 1.0, 1.37, 3.0, 1e3] {
            let q = expected_psi_exp_gaussian(mu);
            let c = expected_psi_closed_form(mu);
            assert!((q - c).abs() < 1e-9 * c.max(1.0), "mu={mu} q={q} c={c}");
        }
        assert!(expected_psi_exp_gaussian(1e3) < 1.0);
        assert!(expected_psi_exp_gaussian(1e-3) > 1.0);
    }

    #[test]
    fn tail_integral_forms() {
        assert!((gaussian_tail_integral(0.0) - 1.0).abs() < 1e-9);
        assert_eq!(gaussian_tail_quoted_form(0.0), 1.0);
        for m in [-3.0, -0.5, 1.0, 2.5, 10.0] {
            assert!((gaussian_tail_integral(m) - gaussian_tail_closed_form(m)).abs() < 1e-9);
        }
        assert!((gaussian_tail_integral(1.0) - gaussian_tail_quoted_form(1.0)).abs() > 0.8);
        let big = gaussian_tail_integral(10.0);
        assert!((big / (10.0 * (2.0 * std::f64::consts::PI).sqrt()) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grid_sheet_boundaries() {
        let g = GridSheet::simulate(9, &mut derive_stream(1, &[]));
        for k in 0..9 {
            assert_eq!(g.at(0, k), 0.0);
            assert_eq!(g.at(k, 0), 0.0);
        }
    }

    #[test]
    fn degenerate_increment_has_unit_mean() {
        let c = exp_sheet_mean_check((0.5, 0.5), (0.5, 0.5), 50, 11, 3).unwrap();
        assert_eq!(c.empirical, 1.0);
        assert_eq!(c.stderr, 0.0);
        assert_eq!(c.target, 1.0);
    }

    #[test]
    fn mean_check_rejects_off_grid_points() {
        assert!(exp_sheet_mean_check((0.55, 1.0), (0.0, 0.0), 10, 11, 1).is_err());
        assert!(exp_sheet_mean_check((0.5, 1.0), (0.6, 0.0), 10, 11, 1).is_err());
    }

    #[test]
    fn ratios_below_one_have_full_tail() {
        let rows = ratio_rows(&[0.5, 1.0, 2.0], &[0.3, 1.2, 0.01], 1.37);
        assert_eq!(rows[0].tail, 1.0);
        assert_eq!(rows[1].tail, 1.0);
        assert!((rows[2].tail - 1.0 / 3.0).abs() < 1e-15);
    }
}
