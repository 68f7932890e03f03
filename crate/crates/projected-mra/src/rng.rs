//! Deterministic randomness utilities.
//!
//! Every random quantity in this crate is drawn from a ChaCha8 stream keyed
//! by an explicit `u64` seed. Sub-seeds are derived with a SplitMix64 chain,
//! so a `(seed, index)` pair always names the same stream no matter how work
//! is scheduled across threads. The transforms from raw bits to uniform and
//! Gaussian deviates are implemented here (fixed-point mantissa extraction
//! and Box-Muller) so that identical seeds reproduce identical samples on
//! every build.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const SPLITMIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of indices into a derived seed.
///
/// Derivation is associative-free on purpose: `derive_seed(s, &[a, b])`,
/// `derive_seed(derive_seed(s, &[a]), &[b])` and `derive_seed(s, &[b, a])`
/// all differ, so each position in the index tuple selects an independent
/// stream.
pub fn derive_seed(master: u64, indices: &[u64]) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for &ix in indices {
        state ^= ix.wrapping_mul(SPLITMIX_GAMMA).rotate_left(17);
        out = splitmix64(&mut state);
    }
    out
}

/// Creates the ChaCha8 stream for a seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `{0, 1, .., n - 1}` by rejection, free of modulo bias.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    assert!(n > 0, "uniform_index needs a non-empty range");
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n + 1) % n;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return (v % n) as usize;
        }
    }
}

/// Uniform draw from the half-open interval `[0, 1)` with 53-bit resolution.
#[inline]
pub fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw from the half-open interval `(0, 1]`, safe under `ln`.
#[inline]
fn positive_unit_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One Box-Muller pair of independent standard normal deviates.
pub fn standard_normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = positive_unit_uniform(rng);
    let u2 = unit_uniform(rng);
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Fills a slice with independent standard normal deviates.
pub fn fill_standard_normal(rng: &mut impl RngCore, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = standard_normal_pair(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = standard_normal_pair(rng).0;
    }
}

/// Standard Gaussian vector scaled to unit Euclidean norm.
pub fn unit_norm_gaussian(rng: &mut impl RngCore, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    loop {
        fill_standard_normal(rng, &mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
            return v;
        }
    }
}
