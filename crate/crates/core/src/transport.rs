//! Uniform transport (telegraph) paths.
//!
//! A path moves with velocity `±sqrt(n)` on `[0, 1]` and reverses direction at
//! the events of a unit-rate Poisson process run on the fast time scale
//! `u = n t`:
//!
//! ```text
//! X(t) = sign * n^{-1/2} * ∫_0^{nt} (-1)^{N(u)} du
//! ```
//!
//! The path is stored as its event times together with the exact value of
//! the inner integral at every event, so evaluation is a binary search plus
//! one linear step.

use serde::Serialize;

use crate::error::{check, Error, Result};
use crate::rng::RngStream;

/// One realized uniform transport path on `t ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TelegraphPath {
    n: u64,
    sign: f64,
    /// Poisson event times on the fast scale, strictly increasing in `(0, n]`.
    events: Vec<f64>,
    /// `∫_0^{events[j]} (-1)^{N(u)} du`, Kahan-accumulated.
    integral_at_events: Vec<f64>,
}

#[inline]
fn parity(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl TelegraphPath {
    /// Assemble a path from explicit parts, validating them.
    pub fn from_parts(n: u64, sign: f64, events: Vec<f64>) -> Result<Self> {
        check(n >= 1, "n", n as f64, "n >= 1")?;
        check(sign == 1.0 || sign == -1.0, "sign", sign, "+1 or -1")?;
        let horizon = n as f64;
        if !events.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Unsorted("event times"));
        }
        if let (Some(&first), Some(&last)) = (events.first(), events.last()) {
            check(first > 0.0, "first event", first, "inside (0, n]")?;
            check(last <= horizon, "last event", last, "inside (0, n]")?;
        }
        let mut integral_at_events = Vec::with_capacity(events.len());
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut prev = 0.0;
        for (j, &e) in events.iter().enumerate() {
            // on [events[j-1], events[j]) exactly j flips have happened
            let y = parity(j) * (e - prev) - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            integral_at_events.push(sum);
            prev = e;
        }
        Ok(Self {
            n,
            sign,
            events,
            integral_at_events,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn events(&self) -> &[f64] {
        &self.events
    }

    /// Kink locations `events / n` on the `t` scale.
    pub fn kink_times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n as f64;
        self.events.iter().map(move |e| e / n)
    }

    /// Path values at the kinks.
    pub fn kink_values(&self) -> impl Iterator<Item = f64> + '_ {
        let scale = self.sign / (self.n as f64).sqrt();
        self.integral_at_events.iter().map(move |v| scale * v)
    }

    /// Inner integral `∫_0^u (-1)^{N(v)} dv` given the number of events `<= u`.
    #[inline]
    fn integral_with_count(&self, u: f64, count: usize) -> f64 {
        if count == 0 {
            u
        } else {
            self.integral_at_events[count - 1] + parity(count) * (u - self.events[count - 1])
        }
    }

    #[inline]
    fn scale(&self) -> f64 {
        self.sign / (self.n as f64).sqrt()
    }

    /// `X(t)` for `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check((0.0..=1.0).contains(&t), "t", t, "a time in [0, 1]")?;
        let u = t * self.n as f64;
        let count = self.events.partition_point(|&e| e <= u);
        Ok(self.scale() * self.integral_with_count(u, count))
    }

    /// `X` on an ascending grid in one merged sweep.
    pub fn eval_grid(&self, t_grid: &[f64]) -> Result<Vec<f64>> {
        if !t_grid.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Unsorted("time grid"));
        }
        if let (Some(&a), Some(&b)) = (t_grid.first(), t_grid.last()) {
            check(a >= 0.0, "t", a, "a time in [0, 1]")?;
            check(b <= 1.0, "t", b, "a time in [0, 1]")?;
        }
        let n = self.n as f64;
        let scale = self.scale();
        let mut count = 0;
        Ok(t_grid
            .iter()
            .map(|&t| {
                let u = t * n;
                while count < self.events.len() && self.events[count] <= u {
                    count += 1;
                }
                scale * self.integral_with_count(u, count)
            })
            .collect())
    }

    /// `max_{t ∈ [0,1]} |X(t)|`, attained at a kink or at `t = 1`.
    pub fn sup_abs(&self) -> f64 {
        let end = self.integral_with_count(self.n as f64, self.events.len()).abs();
        let inner = self.integral_at_events.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        end.max(inner) / (self.n as f64).sqrt()
    }

    /// The same path with the opposite initial sign.
    pub fn flipped(&self) -> Self {
        Self {
            sign: -self.sign,
            ..self.clone()
        }
    }
}

/// Draw a path: sign first, then the Poisson events on `(0, n]`.
pub fn build_telegraph(n: u64, stream: &mut RngStream) -> Result<TelegraphPath> {
    check(n >= 1, "n", n as f64, "n >= 1")?;
    let sign = stream.sample_sign();
    let events = stream.sample_poisson_events(n as f64)?;
    TelegraphPath::from_parts(n, sign, events)
}

pub fn eval_transport(path: &TelegraphPath, t: f64) -> Result<f64> {
    path.eval(t)
}

pub fn eval_transport_grid(path: &TelegraphPath, t_grid: &[f64]) -> Result<Vec<f64>> {
    path.eval_grid(t_grid)
}

pub fn sup_abs_transport(path: &TelegraphPath) -> f64 {
    path.sup_abs()
}

/// `points` equally spaced times from 0 to 1 inclusive.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs both endpoints");
    let last = (points - 1) as f64;
    (0..points)
        .map(|j| if j + 1 == points { 1.0 } else { j as f64 / last })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    /// Midpoint Riemann sum of the sign integrand with step `h` on the fast scale.
    fn riemann(path: &TelegraphPath, t: f64, h: f64) -> f64 {
        let u_end = t * path.n() as f64;
        let steps = (u_end / h).round() as usize;
        let mut value = 0.0;
        let mut count = 0;
        for i in 0..steps {
            let u = (i as f64 + 0.5) * h;
            while count < path.events().len() && path.events()[count] <= u {
                count += 1;
            }
            value += parity(count) * h;
        }
        path.sign() * value / (path.n() as f64).sqrt()
    }

    #[test]
    fn no_flip_path() {
        let p = TelegraphPath::from_parts(4, 1.0, vec![]).unwrap();
        assert!((p.eval(0.5).unwrap() - 1.0).abs() < 1e-15);
        let q = TelegraphPath::from_parts(1, 1.0, vec![]).unwrap();
        assert_eq!(q.sup_abs(), 1.0);
    }

    #[test]
    fn single_flip_path() {
        let p = TelegraphPath::from_parts(1, 1.0, vec![0.5]).unwrap();
        assert!(p.eval(1.0).unwrap().abs() < 1e-15);
        assert!((riemann(&p, 1.0, 1e-6) - 0.0).abs() < 1e-6);
        assert!((p.sup_abs() - 0.5).abs() < 1e-15);
        let dense = (0..=100_000)
            .map(|i| p.eval(i as f64 / 1e5).unwrap().abs())
            .fold(0.0, f64::max);
        assert!((dense - p.sup_abs()).abs() < 1e-5);
        assert_eq!(p.flipped().sup_abs(), p.sup_abs());
    }

    #[test]
    fn starts_at_zero_and_is_deterministic() {
        for r in 0..20 {
            let a = build_telegraph(1 + r * 37, &mut derive_stream(5, &[r])).unwrap();
            let b = build_telegraph(1 + r * 37, &mut derive_stream(5, &[r])).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.eval(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_telegraph(0, &mut derive_stream(1, &[])).is_err());
        let p = TelegraphPath::from_parts(2, 1.0, vec![0.3, 1.1]).unwrap();
        assert!(p.eval(1.5).is_err());
        assert!(p.eval(-0.1).is_err());
        assert!(p.eval_grid(&[0.0, 0.5, 0.2]).is_err());
        assert!(TelegraphPath::from_parts(2, 1.0, vec![1.1, 0.3]).is_err());
        assert!(TelegraphPath::from_parts(2, 1.0, vec![0.0, 0.3]).is_err());
        assert!(TelegraphPath::from_parts(2, 1.0, vec![0.3, 2.5]).is_err());
        assert!(TelegraphPath::from_parts(2, 0.5, vec![]).is_err());
    }

    #[test]
    fn grid_matches_pointwise() {
        let p = build_telegraph(3000, &mut derive_stream(8, &[0])).unwrap();
        let grid = uniform_grid(1000);
        let batch = p.eval_grid(&grid).unwrap();
        for (t, v) in grid.iter().zip(&batch) {
            assert!((p.eval(*t).unwrap() - v).abs() < 1e-12);
        }
        assert_eq!(p.eval_grid(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn grid_matches_riemann_oracle() {
        let p = build_telegraph(50, &mut derive_stream(8, &[1])).unwrap();
        for &t in &[0.1, 0.37, 0.5, 0.99, 1.0] {
            let oracle = riemann(&p, t, 1e-6);
            assert!((p.eval(t).unwrap() - oracle).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn slopes_are_plus_minus_sqrt_n() {
        let n = 400;
        let p = build_telegraph(n, &mut derive_stream(2, &[0])).unwrap();
        let grid = uniform_grid(100_001);
        let vals = p.eval_grid(&grid).unwrap();
        let rate = (n as f64).sqrt();
        let mut checked = 0;
        for i in 0..grid.len() - 1 {
            let (a, b) = (grid[i] * n as f64, grid[i + 1] * n as f64);
            if p.events().iter().any(|&e| e > a && e <= b) {
                continue;
            }
            let slope = (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]);
            assert!((slope.abs() - rate).abs() < 1e-9 * rate, "slope {slope}");
            checked += 1;
        }
        assert!(checked > 90_000);
    }

    #[test]
    fn event_count_mean_at_n_1000() {
        let reps = 1000;
        let total: usize = (0..reps)
            .map(|r| build_telegraph(1000, &mut derive_stream(77, &[r])).unwrap().events().len())
            .sum();
        let mean = total as f64 / reps as f64;
        // the mean over replicas has standard error 1; 95 is the 3-sigma
        // bound for a single replica
        assert!((mean - 1000.0).abs() < 95.0);
        assert!((mean - 1000.0).abs() < 4.0, "mean {mean}");
    }

    #[test]
    fn terminal_variance_near_one() {
        let reps = 10_000u64;
        let xs: Vec<f64> = (0..reps)
            .map(|r| {
                build_telegraph(10_000, &mut derive_stream(13, &[r]))
                    .unwrap()
                    .eval(1.0)
                    .unwrap()
            })
            .collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / reps as f64;
        // fourth moment ~ 3 for a near-Gaussian, so se(var) ~ sqrt(2 / reps)
        assert!((var - 1.0).abs() < 3.0 * (2.0 / reps as f64).sqrt(), "var = {var}");
    }
}
