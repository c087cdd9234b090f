//! Deterministic random sampling for the oracle suites.
//!
//! Every consumer derives an independent ChaCha substream from a base seed
//! and a stream index, so results are reproducible regardless of how work is
//! sharded across threads.

use crate::real::{real, Real};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default seed used by the command-line tools and the acceptance suite.
pub const DEFAULT_SEED: u64 = 0xF1C5ED;

/// One generator per (seed, stream) pair.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Log-uniform magnitude in `[lo, hi]` (both positive).
pub fn log_uniform<T: Real>(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> T {
    let e = rng.random_range(lo.ln()..hi.ln());
    real(e.exp())
}

/// Standard normal via Box-Muller (keeps the dependency set small).
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniformly random unit vector.
pub fn unit_vector<T: Real>(rng: &mut ChaCha8Rng, dim: usize) -> Vec<T> {
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-9 {
            return raw.into_iter().map(|v| real(v / n)).collect();
        }
    }
}

/// Vector with log-uniform norm in `[lo, hi]` and random direction.
pub fn log_uniform_vector<T: Real>(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Vec<T> {
    let m: T = log_uniform(rng, lo, hi);
    unit_vector::<T>(rng, dim)
        .into_iter()
        .map(|d| d * m)
        .collect()
}

/// Signed scalar with log-uniform magnitude.
pub fn log_uniform_signed<T: Real>(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> T {
    let m: T = log_uniform(rng, lo, hi);
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

/// Random dimension in `1..=max_dim`.
pub fn dimension(rng: &mut ChaCha8Rng, max_dim: usize) -> usize {
    rng.random_range(1..=max_dim)
}

/// Nonincreasing nonnegative sequence plus a majorized partner built by
/// repeated rich-to-poor transfers (each transfer preserves majorization).
pub fn majorizing_pair<T: Real>(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<T>, Vec<T>) {
    let mut a: Vec<f64> = (0..dim)
        .map(|_| {
            let v: f64 = rng.random_range(-6.0..6.0_f64);
            10f64.powf(v)
        })
        .collect();
    a.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut b = a.clone();
    if dim > 1 {
        for _ in 0..2 * dim {
            let i = rng.random_range(0..dim - 1);
            let j = rng.random_range(i + 1..dim);
            let gap = b[i] - b[j];
            if gap <= 0.0 {
                continue;
            }
            let delta = rng.random_range(0.0..0.5) * gap;
            b[i] -= delta;
            b[j] += delta;
            b.sort_by(|x, y| y.partial_cmp(x).unwrap());
        }
    }
    (
        a.into_iter().map(real).collect(),
        b.into_iter().map(real).collect(),
    )
}
