//! Reproducible random streams.
//!
//! Every random quantity in an experiment is drawn from an [`RngStream`]
//! addressed by `(master_seed, path)`, for example `[experiment, n, replica,
//! strip, purpose]`. The path is folded into a ChaCha8 key with a SplitMix64
//! style mixer, so a stream never depends on how many draws other streams
//! made. Parallel replicas therefore produce the same numbers as a serial
//! run.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check, Result};
use crate::special::normal_quantile;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // 53 random bits centred in their cell: never 0, never 1.
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// A deterministic random stream addressed by a master seed and a path.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<u64>,
    key: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    /// Derive the stream at `path` below `master_seed`.
    pub fn derive(master_seed: u64, path: &[u64]) -> Self {
        let mut key = mix64(master_seed ^ 0x5EED_5EED_5EED_5EED);
        for (depth, &p) in path.iter().enumerate() {
            key = mix64(key.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 1)) ^ mix64(p ^ GOLDEN));
        }
        let mut seed = [0u8; 32];
        let mut state = key;
        for chunk in seed.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        Self {
            master_seed,
            path: path.to_vec(),
            key,
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    /// The stream one level below this one. Independent of this stream's
    /// position: children of a partially consumed stream are unchanged.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self::derive(self.master_seed, &path)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        unit_open(self.rng.next_u64())
    }

    /// Exp(1) by inversion.
    pub fn next_exp(&mut self) -> f64 {
        -self.next_uniform().ln()
    }

    /// Standard normal by inversion of the normal CDF.
    pub fn next_normal(&mut self) -> f64 {
        normal_quantile(self.next_uniform())
    }

    /// +1 or -1 with probability 1/2 each.
    pub fn sample_sign(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Event times of a unit-rate Poisson process on `(0, horizon]`,
    /// accumulated from Exp(1) spacings.
    pub fn sample_poisson_events(&mut self, horizon: f64) -> Result<Vec<f64>> {
        check(horizon > 0.0 && horizon.is_finite(), "horizon", horizon, "a positive finite real")?;
        let mut events = Vec::with_capacity(horizon as usize + 4 * (horizon.sqrt() as usize) + 4);
        let mut t = 0.0;
        loop {
            t += self.next_exp();
            if t > horizon {
                break;
            }
            events.push(t);
        }
        Ok(events)
    }

    /// A counter-addressed uniform on (0, 1). Does not advance the stream:
    /// the same `counter` always gives the same value.
    pub fn keyed_uniform(&self, counter: u64) -> f64 {
        unit_open(mix64(mix64(self.key ^ counter.wrapping_mul(GOLDEN)).wrapping_add(self.key)))
    }

    /// Standard normal addressed by `counter`, see [`RngStream::keyed_uniform`].
    pub fn keyed_normal(&self, counter: u64) -> f64 {
        normal_quantile(self.keyed_uniform(counter))
    }
}

/// Free-function form of [`RngStream::derive`].
pub fn derive_stream(master_seed: u64, path: &[u64]) -> RngStream {
    RngStream::derive(master_seed, path)
}
