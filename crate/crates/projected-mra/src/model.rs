//! Observation model: uniformly random cyclic shifts seen through a fixed
//! symmetric projection, plus white Gaussian noise.
//!
//! The projection keeps the `q` symmetric coordinate sums
//! `(P v)[j] = v[j] + v[p - j]` for `j = 1..=q` and discards index 0. It
//! erases the orientation of the shift: a shifted reflection of the signal
//! produces exactly the same projected sample as some plain shift, which is
//! why recovery is only possible up to the dihedral orbit.
//!
//! Each observation is `y_i = P(shift_{l_i} s) + noise`, with `l_i` uniform
//! on `{0, .., p - 1}` and i.i.d. `N(0, sigma^2)` noise in every retained
//! coordinate. Batches are generated deterministically: sample `i` draws
//! from a fresh stream keyed by `(seed, i)`, first the shift, then the
//! noise coordinates in Box-Muller pairs, so results do not depend on how
//! samples are scheduled.

use crate::error::{Error, Result};
use crate::rng;
use crate::signal::Signal;

/// Projects a signal to its `q` symmetric coordinate sums.
pub fn project(s: &Signal) -> Vec<f64> {
    project_values(s.values())
}

pub(crate) fn project_values(values: &[f64]) -> Vec<f64> {
    let p = values.len();
    let q = (p - 1) / 2;
    (1..=q).map(|j| values[j] + values[p - j]).collect()
}

/// The noiseless projected observation for one shift: `P(shift_l s)`.
pub fn projected_orbit_sample(s: &Signal, shift: usize) -> Vec<f64> {
    assert!(shift < s.p(), "shift {shift} out of range for p = {}", s.p());
    let p = s.p();
    let q = s.q();
    let values = s.values();
    (1..=q)
        .map(|j| {
            let a = (j + p - shift % p) % p;
            let b = (2 * p - j - shift % p) % p;
            values[a] + values[b]
        })
        .collect()
}

/// All `p` noiseless projected observations as a flat row-major `p x q`
/// matrix; row `l` is `P(shift_l s)`.
pub(crate) fn projected_orbit_samples(values: &[f64]) -> Vec<f64> {
    let p = values.len();
    let q = (p - 1) / 2;
    let mut rows = Vec::with_capacity(p * q);
    for shift in 0..p {
        for j in 1..=q {
            let a = (j + p - shift) % p;
            let b = (2 * p - j - shift) % p;
            rows.push(values[a] + values[b]);
        }
    }
    rows
}

/// A generated batch of projected observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    q: usize,
    sigma: f64,
    seed: u64,
    /// Row-major `n x q` sample matrix.
    samples: Vec<f64>,
}

impl ObservationBatch {
    /// Number of observations.
    pub fn n(&self) -> usize {
        self.samples.len() / self.q
    }

    /// Retained coordinates per observation.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Length of the underlying signal, `2q + 1`.
    pub fn p(&self) -> usize {
        2 * self.q + 1
    }

    /// Noise standard deviation used to generate the batch.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Seed used to generate the batch.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// One observation row.
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.q..(i + 1) * self.q]
    }

    /// Iterator over observation rows.
    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.q)
    }

    /// Wraps externally built rows (row-major `n x q`) as a batch.
    #[cfg(test)]
    pub(crate) fn from_rows(q: usize, sigma: f64, samples: Vec<f64>) -> Self {
        assert!(q >= 3 && !samples.is_empty() && samples.len() % q == 0);
        Self { q, sigma, seed: 0, samples }
    }
}

/// Draws `n` observations of `s` at noise level `sigma` from the stream
/// keyed by `seed`.
pub fn generate(s: &Signal, n: usize, sigma: f64, seed: u64) -> Result<ObservationBatch> {
    if n == 0 {
        return Err(Error::InvalidConfig("batch size n must be at least 1".into()));
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise level sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    let p = s.p();
    let q = s.q();
    let clean = projected_orbit_samples(s.values());
    let mut samples = vec![0.0; n * q];
    let mut noise = vec![0.0; q];
    for i in 0..n {
        let mut stream = rng::stream(rng::derive_seed(seed, &[i as u64]));
        let shift = rng::uniform_index(&mut stream, p);
        rng::fill_standard_normal(&mut stream, &mut noise);
        let row = &mut samples[i * q..(i + 1) * q];
        let clean_row = &clean[shift * q..(shift + 1) * q];
        for j in 0..q {
            row[j] = clean_row[j] + sigma * noise[j];
        }
    }
    Ok(ObservationBatch { q, sigma, seed, samples })
}
