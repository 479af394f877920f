//! Brownian motion realized on the randomness of a transport path.
//!
//! A telegraph path alternates between two directions. Let `c1(u)` be the
//! fast time spent moving in the initial direction up to `u` and `c2(u)` the
//! time spent moving the other way, so `u = c1 + c2` and the unsigned path
//! value is `c1 - c2`. The direction changes happen at the epochs of two
//! independent unit Poisson processes `P1`, `P2`, read on the clocks `c1` and
//! `c2` respectively, and `P1(c1(u)) - P2(c2(u))` is always 0 or 1.
//!
//! Each `Pi` is coupled to its own Brownian motion `Wi` by a dyadic
//! quantile construction ([`ClockBrownian`]), which makes
//! `Pi(x) - x - Wi(x)` of logarithmic size. Substituting into the phase
//! identity gives `c1 - c2 ≈ W2(c2) - W1(c1)`, and
//!
//! ```text
//! B(t) = sign * n^{-1/2} * (W2(c2(nt)) - W1(c1(nt)))
//! ```
//!
//! is the coupled Brownian motion: a continuous process whose quadratic
//! variation is `c1 + c2 = nt`, before scaling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_stream, RngStream};
use crate::special::{binomial_half_pit, clamp_open, normal_quantile, poisson_pit};
use crate::stats;
use crate::transport::{build_telegraph, uniform_grid, TelegraphPath};

/// Dyadic refinement depth of the Brownian bridge inside a unit cell.
const BRIDGE_DEPTH: u32 = 16;

/// A Brownian motion on `[0, horizon]` coupled to a unit-rate Poisson
/// process by randomized probability integral transforms on dyadic cells.
///
/// The root value `W(H)` is the Gaussian quantile of the Poisson(H) total;
/// every midpoint is the bridge mean plus the Gaussian quantile of the
/// Binomial(k, 1/2) split of the parent count. The transformed uniforms are
/// i.i.d., so `W` has exactly the Wiener law on the integer points. Inside a
/// unit cell the bridge is refined lazily from counter-addressed normals,
/// which keeps `value(x)` a fixed function of `x`.
#[derive(Clone, Debug)]
pub struct ClockBrownian {
    nodes: Vec<f64>,
    bridge: RngStream,
}

impl ClockBrownian {
    /// `epochs` ascending in `(0, horizon]`, `horizon` a power of two.
    pub fn from_epochs(epochs: &[f64], horizon: usize, aux: &mut RngStream, bridge: RngStream) -> Self {
        debug_assert!(horizon.is_power_of_two());
        let mut prefix = vec![0u64; horizon + 1];
        let mut idx = 0;
        for (x, slot) in prefix.iter_mut().enumerate() {
            while idx < epochs.len() && epochs[idx] <= x as f64 {
                idx += 1;
            }
            *slot = idx as u64;
        }
        let mut nodes = vec![0.0; horizon + 1];
        let h = horizon as f64;
        let u = poisson_pit(h, prefix[horizon], aux.next_uniform());
        nodes[horizon] = h.sqrt() * normal_quantile(clamp_open(u));
        let mut step = horizon;
        while step >= 2 {
            let half = step / 2;
            let sd = (step as f64).sqrt() / 2.0;
            for a in (0..horizon).step_by(step) {
                let total = prefix[a + step] - prefix[a];
                let left = prefix[a + half] - prefix[a];
                let u = binomial_half_pit(total, left, aux.next_uniform());
                nodes[a + half] = 0.5 * (nodes[a] + nodes[a + step]) + sd * normal_quantile(clamp_open(u));
            }
            step = half;
        }
        Self { nodes, bridge }
    }

    pub fn horizon(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Values at the integer points `0..=horizon`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn value(&self, x: f64) -> f64 {
        let last = self.horizon() - 1;
        let cell = (x.floor().max(0.0) as usize).min(last);
        let (mut a, mut b) = (cell as f64, cell as f64 + 1.0);
        let (mut wa, mut wb) = (self.nodes[cell], self.nodes[cell + 1]);
        let base = (cell as u64) << (BRIDGE_DEPTH + 1);
        let mut node = 1u64;
        let mut sd = 0.5;
        for _ in 0..BRIDGE_DEPTH {
            let mid = 0.5 * (a + b);
            let wm = 0.5 * (wa + wb) + sd * self.bridge.keyed_normal(base | node);
            sd *= std::f64::consts::FRAC_1_SQRT_2;
            if x < mid {
                b = mid;
                wb = wm;
                node *= 2;
            } else {
                a = mid;
                wa = wm;
                node = 2 * node + 1;
            }
        }
        let f = ((x - a) / (b - a)).clamp(0.0, 1.0);
        wa + f * (wb - wa)
    }
}

/// A transport path together with a Brownian motion on the same randomness.
#[derive(Clone, Debug)]
pub struct CoupledBmPair {
    path: TelegraphPath,
    t_grid: Vec<f64>,
    bm_values: Vec<f64>,
    kink_bm: Vec<f64>,
}

impl CoupledBmPair {
    /// Assemble a pair from explicit legs, e.g. for degenerate checks.
    pub fn from_parts(path: TelegraphPath, t_grid: Vec<f64>, bm_values: Vec<f64>, kink_bm: Vec<f64>) -> Result<Self> {
        validate_grid(&t_grid)?;
        if bm_values.len() != t_grid.len() || kink_bm.len() != path.events().len() {
            return Err(Error::InvalidParameter {
                name: "bm_values",
                value: bm_values.len() as f64,
                expected: "one value per grid point and per kink",
            });
        }
        Ok(Self {
            path,
            t_grid,
            bm_values,
            kink_bm,
        })
    }

    /// The pair whose Brownian leg is the transport path itself.
    pub fn self_paired(path: TelegraphPath, t_grid: Vec<f64>) -> Result<Self> {
        let bm_values = path.eval_grid(&t_grid)?;
        let kink_bm = path.kink_values().collect();
        Self::from_parts(path, t_grid, bm_values, kink_bm)
    }

    pub fn path(&self) -> &TelegraphPath {
        &self.path
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn bm_values(&self) -> &[f64] {
        &self.bm_values
    }

    /// Brownian values at the kink times `path.kink_times()`.
    pub fn kink_bm(&self) -> &[f64] {
        &self.kink_bm
    }

    /// Max of `|X - B|` over the grid and the transport kinks.
    pub fn sup_distance(&self) -> f64 {
        let transport = self.path.eval_grid(&self.t_grid).expect("grid validated at construction");
        let on_grid = transport
            .iter()
            .zip(&self.bm_values)
            .fold(0.0f64, |m, (x, b)| m.max((x - b).abs()));
        self.path
            .kink_values()
            .zip(&self.kink_bm)
            .fold(on_grid, |m, (x, b)| m.max((x - b).abs()))
    }
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if !t_grid.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::Unsorted("time grid"));
    }
    if t_grid.first() != Some(&0.0) || t_grid.last() != Some(&1.0) {
        return Err(Error::GridEndpoints);
    }
    Ok(())
}

/// Clock readings of a path at every event.
struct Clocks {
    at_event: Vec<(f64, f64)>,
    epochs: [Vec<f64>; 2],
    end: (f64, f64),
}

impl Clocks {
    fn of(path: &TelegraphPath) -> Self {
        let mut at_event = Vec::with_capacity(path.events().len());
        let mut epochs = [Vec::new(), Vec::new()];
        let (mut c1, mut c2) = (0.0, 0.0);
        let mut prev = 0.0;
        for (j, &e) in path.events().iter().enumerate() {
            if j % 2 == 0 {
                c1 += e - prev;
                epochs[0].push(c1);
            } else {
                c2 += e - prev;
                epochs[1].push(c2);
            }
            at_event.push((c1, c2));
            prev = e;
        }
        let rest = path.n() as f64 - prev;
        let end = if path.events().len() % 2 == 0 {
            (c1 + rest, c2)
        } else {
            (c1, c2 + rest)
        };
        Self { at_event, epochs, end }
    }

    /// `(c1(u), c2(u))` given the number of events `<= u`.
    fn at(&self, path: &TelegraphPath, u: f64, count: usize) -> (f64, f64) {
        if count == 0 {
            return (u, 0.0);
        }
        let (c1, c2) = self.at_event[count - 1];
        let rest = u - path.events()[count - 1];
        if count % 2 == 0 {
            (c1 + rest, c2)
        } else {
            (c1, c2 + rest)
        }
    }
}

/// Couple a standard Brownian motion to `path`. Deterministic in
/// `(path, stream, t_grid)`; the Brownian leg is also evaluated at every kink.
pub fn couple_bm(path: &TelegraphPath, stream: &RngStream, t_grid: &[f64]) -> Result<CoupledBmPair> {
    validate_grid(t_grid)?;
    let n = path.n() as f64;
    let horizon = (path.n() as usize).next_power_of_two();
    let clocks = Clocks::of(path);
    let ends = [clocks.end.0, clocks.end.1];

    let brownians: Vec<ClockBrownian> = (0..2)
        .map(|i| {
            // extend the clock's Poisson process past what the path consumed;
            // by memorylessness the continuation is a fresh process
            let mut epochs = clocks.epochs[i].clone();
            let mut ext = stream.child(4 + i as u64);
            let mut x = ends[i];
            loop {
                x += ext.next_exp();
                if x > horizon as f64 {
                    break;
                }
                epochs.push(x);
            }
            let mut aux = stream.child(i as u64);
            ClockBrownian::from_epochs(&epochs, horizon, &mut aux, stream.child(2 + i as u64))
        })
        .collect();
    let scale = path.sign() / n.sqrt();
    let bm_at = |c1: f64, c2: f64| scale * (brownians[1].value(c2) - brownians[0].value(c1));

    let mut count = 0;
    let bm_values = t_grid
        .iter()
        .map(|&t| {
            let u = t * n;
            while count < path.events().len() && path.events()[count] <= u {
                count += 1;
            }
            let (c1, c2) = clocks.at(path, u, count);
            bm_at(c1, c2)
        })
        .collect();

    // at a kink one clock has just advanced; the other is unchanged
    let mut w = [0.0, 0.0];
    let kink_bm = clocks
        .at_event
        .iter()
        .enumerate()
        .map(|(j, &(c1, c2))| {
            if j % 2 == 0 {
                w[0] = brownians[0].value(c1);
            } else {
                w[1] = brownians[1].value(c2);
            }
            if j == 0 {
                w[1] = brownians[1].value(0.0);
            }
            scale * (w[1] - w[0])
        })
        .collect();

    Ok(CoupledBmPair {
        path: path.clone(),
        t_grid: t_grid.to_vec(),
        bm_values,
        kink_bm,
    })
}

pub fn sup_distance(pair: &CoupledBmPair) -> f64 {
    pair.sup_distance()
}

pub(crate) const BM_RATE_TAG: u64 = 1;

/// Sup distances of `replicas` independent coupled pairs at scale `n`.
pub fn bm_sup_distances(n: u64, replicas: usize, master_seed: u64, grid_size: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    let grid = uniform_grid(grid_size.max(2));
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let replica = derive_stream(master_seed, &[BM_RATE_TAG, n, r as u64]);
            let path = build_telegraph(n, &mut replica.child(0))?;
            Ok(couple_bm(&path, &replica.child(1), &grid)?.sup_distance())
        })
        .collect()
}

/// One row of the Brownian-motion rate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BmRateRow {
    pub n: u64,
    pub replicas: usize,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub seed: u64,
}

/// Quantiles of the coupled sup distance for each `n`.
pub fn bm_rate_experiment(n_list: &[u64], replicas: usize, master_seed: u64, grid_size: usize) -> Result<Vec<BmRateRow>> {
    if n_list.is_empty() {
        return Err(Error::Empty("n list"));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Unsorted("n list"));
    }
    if replicas == 0 {
        return Err(Error::Empty("replica set"));
    }
    n_list
        .iter()
        .map(|&n| {
            let sorted = stats::sorted(&bm_sup_distances(n, replicas, master_seed, grid_size)?);
            Ok(BmRateRow {
                n,
                replicas,
                median: stats::quantile_sorted(&sorted, 0.5),
                q90: stats::quantile_sorted(&sorted, 0.9),
                q99: stats::quantile_sorted(&sorted, 0.99),
                seed: master_seed,
            })
        })
        .collect()
}
