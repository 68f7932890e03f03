//! Moment tensors of projected observations and the Fourier-cosine change
//! of basis that makes them transparent.
//!
//! Working in time coordinates, the first three moments of a projected
//! sample `X` are averaged over the uniform shift: `t1 = E[X]`,
//! `t2 = E[X (x) X]`, `t3 = E[X (x) X (x) X]`. In the Fourier-cosine basis
//! the same information becomes diagonal: writing `r_k`, `phi_k` for the
//! magnitude and phase of the signal's spectrum at frequency `k`, the
//! second cosine moment is `diag(2 r_k^2)` and the third is supported only
//! on frequency triples with `a + b = c` (value
//! `2 r_a r_b r_c cos(phi_a + phi_b - phi_c)`, up to permutation) or
//! `a + b + c = p` (value `2 r_a r_b r_c cos(phi_a + phi_b + phi_c)`).
//!
//! The bridge between the two coordinate systems is the `q x q` cosine
//! matrix `A[j][k] = 2 cos(2 pi j k / p)`, which satisfies the Gram
//! identity `A^T A = p I - 2 J` (with `J` the all-ones matrix) and hence
//! has singular values `sqrt(p)` (once) and `1` (with multiplicity
//! `q - 1`): inverting it amplifies noise by a factor growing like
//! `sqrt(p)`. [`to_cosine`] centers the time-side tensors, applies the
//! inverse cosine matrix along every mode, and rescales by `p^{d/2}`;
//! [`population_cosine_moments`] computes the same quantities by direct
//! enumeration over shifts and serves both as the independent cross-check
//! and as the model predictor for cosine-side fitting.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{projected_orbit_samples, ObservationBatch};
use crate::signal::{dft, Signal};

/// Provenance of a moment set; debiasing and recovery check it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// Exact expectation over the uniform shift, no noise.
    Population,
    /// Plain averages of a noisy batch.
    RawEmpirical,
    /// Batch averages with the Gaussian noise contribution removed.
    DebiasedEmpirical,
}

impl MomentKind {
    /// Short human-readable label.
    pub fn label(self) -> &'static str {
        match self {
            MomentKind::Population => "population",
            MomentKind::RawEmpirical => "raw-empirical",
            MomentKind::DebiasedEmpirical => "debiased-empirical",
        }
    }
}

/// First, second, and third moment tensors of projected observations, in
/// time coordinates. Tensors are dense and row-major: `t2` has shape
/// `q x q`, `t3` has shape `q x q x q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub q: usize,
    pub kind: MomentKind,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub t3: Vec<f64>,
}

impl MomentSet {
    /// Entry `t2[a][b]` (zero-based indices).
    pub fn t2_at(&self, a: usize, b: usize) -> f64 {
        self.t2[a * self.q + b]
    }

    /// Entry `t3[a][b][c]` (zero-based indices).
    pub fn t3_at(&self, a: usize, b: usize, c: usize) -> f64 {
        self.t3[(a * self.q + b) * self.q + c]
    }
}

/// Moments after the change of basis: the projected first moment is kept
/// as-is, while the second and third tensors live in cosine coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineMomentSet {
    pub q: usize,
    /// First moment, unchanged from time coordinates.
    pub t1_projected: Vec<f64>,
    /// Second cosine moment, `q x q` row-major.
    pub m2: Vec<f64>,
    /// Third cosine moment, `q x q x q` row-major.
    pub m3: Vec<f64>,
}

impl CosineMomentSet {
    /// Entry `m2[a][b]` (zero-based; index `k - 1` holds frequency `k`).
    pub fn m2_at(&self, a: usize, b: usize) -> f64 {
        self.m2[a * self.q + b]
    }

    /// Entry `m3[a][b][c]` (zero-based; index `k - 1` holds frequency `k`).
    pub fn m3_at(&self, a: usize, b: usize, c: usize) -> f64 {
        self.m3[(a * self.q + b) * self.q + c]
    }
}

/// Frobenius norm of a dense tensor stored as a flat slice.
pub fn frobenius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// The cosine matrix `A[j][k] = 2 cos(2 pi j k / p)` for `j, k = 1..=q`,
/// together with its cached inverse.
#[derive(Debug, Clone)]
pub struct CosineMatrix {
    p: usize,
    q: usize,
    a: Vec<f64>,
    a_inv: Vec<f64>,
}

impl CosineMatrix {
    /// Builds the matrix for an odd `p >= 7`, inverts it once by a dense
    /// solve, and verifies the inverse to `1e-10` in the max norm.
    pub fn new(p: usize) -> Result<Self> {
        if p < 7 || p % 2 == 0 {
            return Err(Error::InvalidLength(p));
        }
        let q = (p - 1) / 2;
        let mut a = vec![0.0; q * q];
        for j in 1..=q {
            for k in 1..=q {
                a[(j - 1) * q + (k - 1)] =
                    2.0 * (std::f64::consts::TAU * (j * k) as f64 / p as f64).cos();
            }
        }
        let matrix = DMatrix::from_row_slice(q, q, &a);
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix { residual: f64::INFINITY })?;
        let product = &matrix * &inverse;
        let mut residual = 0.0_f64;
        for i in 0..q {
            for j in 0..q {
                let target = if i == j { 1.0 } else { 0.0 };
                residual = residual.max((product[(i, j)] - target).abs());
            }
        }
        if residual > 1e-10 {
            return Err(Error::SingularMatrix { residual });
        }
        let mut a_inv = vec![0.0; q * q];
        for i in 0..q {
            for j in 0..q {
                a_inv[i * q + j] = inverse[(i, j)];
            }
        }
        Ok(Self { p, q, a, a_inv })
    }

    /// Signal length `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Matrix dimension `q`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Row-major `q x q` entries of `A`; index `k - 1` holds frequency `k`.
    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    /// Row-major `q x q` entries of `A^{-1}`.
    pub fn inverse(&self) -> &[f64] {
        &self.a_inv
    }
}

/// Exact moments of the projected observations of `s` under the uniform
/// shift and zero noise, by direct enumeration of all `p` shifts.
pub fn population_moments(s: &Signal) -> MomentSet {
    population_moments_from_values(s.values())
}

pub(crate) fn population_moments_from_values(values: &[f64]) -> MomentSet {
    let p = values.len();
    let q = (p - 1) / 2;
    let rows = projected_orbit_samples(values);
    let mut set = accumulate_moments(rows.chunks_exact(q), q, p);
    set.kind = MomentKind::Population;
    set
}

/// Streaming sample moments of a batch.
pub fn empirical_moments(batch: &ObservationBatch) -> MomentSet {
    accumulate_moments(batch.samples(), batch.q(), batch.n())
}

fn accumulate_moments<'a>(
    rows: impl Iterator<Item = &'a [f64]>,
    q: usize,
    count: usize,
) -> MomentSet {
    let mut t1 = vec![0.0; q];
    let mut t2 = vec![0.0; q * q];
    let mut t3 = vec![0.0; q * q * q];
    for row in rows {
        for a in 0..q {
            let xa = row[a];
            t1[a] += xa;
            for b in 0..q {
                let xab = xa * row[b];
                t2[a * q + b] += xab;
                let base = (a * q + b) * q;
                for c in 0..q {
                    t3[base + c] += xab * row[c];
                }
            }
        }
    }
    let w = 1.0 / count as f64;
    for v in &mut t1 {
        *v *= w;
    }
    for v in &mut t2 {
        *v *= w;
    }
    for v in &mut t3 {
        *v *= w;
    }
    MomentSet { q, kind: MomentKind::RawEmpirical, t1, t2, t3 }
}

/// Removes the additive Gaussian noise contribution from raw empirical
/// moments: the second moment loses `sigma^2 I`, the third loses
/// `sigma^2 (mu_a d_bc + mu_b d_ac + mu_c d_ab)` built from the empirical
/// mean `mu`.
pub fn debias(raw: &MomentSet, sigma: f64) -> Result<MomentSet> {
    if raw.kind != MomentKind::RawEmpirical {
        return Err(Error::KindMismatch {
            expected: MomentKind::RawEmpirical.label(),
            got: raw.kind.label(),
        });
    }
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise level sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    let q = raw.q;
    let s2 = sigma * sigma;
    let mu = &raw.t1;
    let mut t2 = raw.t2.clone();
    for a in 0..q {
        t2[a * q + a] -= s2;
    }
    let mut t3 = raw.t3.clone();
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                let mut correction = 0.0;
                if b == c {
                    correction += mu[a];
                }
                if a == c {
                    correction += mu[b];
                }
                if a == b {
                    correction += mu[c];
                }
                t3[(a * q + b) * q + c] -= s2 * correction;
            }
        }
    }
    Ok(MomentSet { q, kind: MomentKind::DebiasedEmpirical, t1: raw.t1.clone(), t2, t3 })
}

/// `B * T * B^T` for a `q x q` tensor.
fn transform_mode2(b: &[f64], t: &[f64], q: usize) -> Vec<f64> {
    // First mode: rows.
    let mut tmp = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let mut acc = 0.0;
            for m in 0..q {
                acc += b[i * q + m] * t[m * q + j];
            }
            tmp[i * q + j] = acc;
        }
    }
    // Second mode: columns.
    let mut out = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let mut acc = 0.0;
            for m in 0..q {
                acc += tmp[i * q + m] * b[j * q + m];
            }
            out[i * q + j] = acc;
        }
    }
    out
}

/// Applies `B` along each of the three modes of a `q x q x q` tensor.
fn transform_mode3(b: &[f64], t: &[f64], q: usize) -> Vec<f64> {
    let idx = |a: usize, c: usize, d: usize| (a * q + c) * q + d;
    let mut cur = t.to_vec();
    let mut next = vec![0.0; q * q * q];
    // Mode 0.
    for i in 0..q {
        for c in 0..q {
            for d in 0..q {
                let mut acc = 0.0;
                for m in 0..q {
                    acc += b[i * q + m] * cur[idx(m, c, d)];
                }
                next[idx(i, c, d)] = acc;
            }
        }
    }
    std::mem::swap(&mut cur, &mut next);
    // Mode 1.
    for a in 0..q {
        for i in 0..q {
            for d in 0..q {
                let mut acc = 0.0;
                for m in 0..q {
                    acc += b[i * q + m] * cur[idx(a, m, d)];
                }
                next[idx(a, i, d)] = acc;
            }
        }
    }
    std::mem::swap(&mut cur, &mut next);
    // Mode 2.
    for a in 0..q {
        for c in 0..q {
            for i in 0..q {
                let mut acc = 0.0;
                for m in 0..q {
                    acc += b[i * q + m] * cur[idx(a, c, m)];
                }
                next[idx(a, c, i)] = acc;
            }
        }
    }
    next
}

/// Centers the time-side tensors and changes basis to cosine coordinates:
/// the centered degree-`d` tensor is hit with `A^{-1}` along every mode and
/// scaled by `p^{d/2}`. The first moment is kept in projected coordinates.
///
/// Centering always uses the moment set's own first-moment vector; for a
/// population set that vector must be constant across coordinates (it is a
/// multiple of the all-ones vector in exact arithmetic) and a relative
/// spread beyond `1e-9` is rejected as inconsistent input.
pub fn to_cosine(m: &MomentSet, cm: &CosineMatrix) -> Result<CosineMomentSet> {
    let q = m.q;
    if q != cm.q() {
        return Err(Error::DimensionMismatch { expected: cm.q(), got: q });
    }
    let p = cm.p() as f64;
    if m.kind == MomentKind::Population {
        let mean = m.t1.iter().sum::<f64>() / q as f64;
        let spread = m.t1.iter().map(|v| (v - mean).abs()).fold(0.0_f64, f64::max);
        // The floor keeps zero-mean signals, whose t1 is rounding dust,
        // from tripping the constancy check.
        let tolerance = 1e-9 * frobenius(&m.t1) + 1e-13 * frobenius(&m.t2).sqrt();
        if spread > tolerance {
            return Err(Error::NonUniformFirstMoment { spread });
        }
    }
    let mu = &m.t1;
    let mut centered2 = vec![0.0; q * q];
    for a in 0..q {
        for b in 0..q {
            centered2[a * q + b] = m.t2_at(a, b) - mu[a] * mu[b];
        }
    }
    let mut centered3 = vec![0.0; q * q * q];
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                centered3[(a * q + b) * q + c] = m.t3_at(a, b, c)
                    - mu[a] * m.t2_at(b, c)
                    - mu[b] * m.t2_at(a, c)
                    - mu[c] * m.t2_at(a, b)
                    + 2.0 * mu[a] * mu[b] * mu[c];
            }
        }
    }
    let inv = cm.inverse();
    let mut m2 = transform_mode2(inv, &centered2, q);
    for v in &mut m2 {
        *v *= p;
    }
    let mut m3 = transform_mode3(inv, &centered3, q);
    let scale3 = p.powf(1.5);
    for v in &mut m3 {
        *v *= scale3;
    }
    Ok(CosineMomentSet { q, t1_projected: m.t1.clone(), m2, m3 })
}

/// Cosine-side population moments by direct enumeration over shifts,
/// bypassing the centering and basis-change pipeline entirely. This is the
/// independent route against which [`to_cosine`] is validated, and the
/// model predictor used when fitting in cosine coordinates.
pub fn population_cosine_moments(s: &Signal) -> CosineMomentSet {
    population_cosine_moments_from_values(s.values())
}

pub(crate) fn population_cosine_moments_from_values(values: &[f64]) -> CosineMomentSet {
    let p = values.len();
    let q = (p - 1) / 2;
    let spectrum = dft(values);
    let omega = std::f64::consts::TAU / p as f64;
    // Cosine coefficient rows: row l holds 2 Re(spectrum[k] e^{-i w k l}).
    let mut rows = vec![0.0; p * q];
    for l in 0..p {
        for k in 1..=q {
            let angle = omega * (k * l) as f64;
            rows[l * q + (k - 1)] =
                2.0 * (spectrum[k].re * angle.cos() + spectrum[k].im * angle.sin());
        }
    }
    let mut m2 = vec![0.0; q * q];
    let mut m3 = vec![0.0; q * q * q];
    for l in 0..p {
        let row = &rows[l * q..(l + 1) * q];
        for a in 0..q {
            let ca = row[a];
            for b in 0..q {
                let cab = ca * row[b];
                m2[a * q + b] += cab;
                let base = (a * q + b) * q;
                for c in 0..q {
                    m3[base + c] += cab * row[c];
                }
            }
        }
    }
    let w = 1.0 / p as f64;
    for v in &mut m2 {
        *v *= w;
    }
    for v in &mut m3 {
        *v *= w;
    }
    // First projected moment by direct averaging of the shift orbit.
    let samples = projected_orbit_samples(values);
    let mut t1 = vec![0.0; q];
    for l in 0..p {
        for j in 0..q {
            t1[j] += samples[l * q + j];
        }
    }
    for v in &mut t1 {
        *v *= w;
    }
    CosineMomentSet { q, t1_projected: t1, m2, m3 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, projected_orbit_sample};
    use crate::rng;
    use crate::signal::{DihedralElement, SpectralForm};

    fn random_signal(p: usize, seed: u64) -> Signal {
        let mut r = rng::stream(seed);
        let mut values = vec![0.0; p];
        rng::fill_standard_normal(&mut r, &mut values);
        Signal::new(values).unwrap()
    }

    #[test]
    fn gram_identity_and_singular_values() {
        for p in [7usize, 13] {
            let cm = CosineMatrix::new(p).unwrap();
            let q = cm.q();
            let a = DMatrix::from_row_slice(q, q, cm.matrix());
            let gram = a.transpose() * &a;
            for i in 0..q {
                for j in 0..q {
                    let expected = if i == j { p as f64 - 2.0 } else { -2.0 };
                    assert!(
                        (gram[(i, j)] - expected).abs() < 1e-12,
                        "p = {p}, gram entry ({i}, {j})"
                    );
                }
            }
            let mut singular: Vec<f64> = a.svd(false, false).singular_values.iter().copied().collect();
            singular.sort_by(|x, y| y.partial_cmp(x).unwrap());
            // The Gram identity gives eigenvalues p (q - 1 times) and 1.
            for s in &singular[..q - 1] {
                assert!((s - (p as f64).sqrt()).abs() < 1e-10, "p = {p}, singular value {s}");
            }
            assert!((singular[q - 1] - 1.0).abs() < 1e-10, "p = {p}");
            let condition = singular[0] / singular[q - 1];
            assert!((condition - (p as f64).sqrt()).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn inverse_matches_algebraic_closed_form() {
        // The Gram identity implies A^{-1} = (A - 2 J) / p with J all ones.
        for p in [7usize, 13, 21] {
            let cm = CosineMatrix::new(p).unwrap();
            let q = cm.q();
            for i in 0..q {
                for j in 0..q {
                    let expected = (cm.matrix()[i * q + j] - 2.0) / p as f64;
                    assert!(
                        (cm.inverse()[i * q + j] - expected).abs() < 1e-10,
                        "p = {p}, entry ({i}, {j})"
                    );
                }
            }
        }
    }

    #[test]
    fn cosine_matrix_rejects_bad_lengths() {
        assert!(matches!(CosineMatrix::new(8), Err(Error::InvalidLength(8))));
        assert!(matches!(CosineMatrix::new(5), Err(Error::InvalidLength(5))));
    }

    #[test]
    fn population_first_moment_is_constant_multiple_of_ones() {
        let p = 13;
        let s = random_signal(p, 1);
        let m = population_moments(&s);
        let form = SpectralForm::from_signal(&s);
        let expected = 2.0 / (p as f64).sqrt() * form.mean;
        for (j, v) in m.t1.iter().enumerate() {
            assert!((v - expected).abs() < 1e-12, "coordinate {j}");
        }
    }

    #[test]
    fn population_second_cosine_moment_is_diagonal_in_squared_magnitudes() {
        let p = 13;
        let s = random_signal(p, 2);
        let c = population_cosine_moments(&s);
        let form = SpectralForm::from_signal(&s);
        for a in 0..c.q {
            for b in 0..c.q {
                let expected = if a == b {
                    2.0 * form.magnitudes[a] * form.magnitudes[a]
                } else {
                    0.0
                };
                assert!(
                    (c.m2_at(a, b) - expected).abs() < 1e-12,
                    "entry ({a}, {b}) = {} vs {expected}",
                    c.m2_at(a, b)
                );
            }
        }
    }

    #[test]
    fn population_third_cosine_moment_obeys_selection_rules() {
        let p = 13;
        let q = 6;
        let s = random_signal(p, 3);
        let c = population_cosine_moments(&s);
        let form = SpectralForm::from_signal(&s);
        let r = &form.magnitudes;
        let phi = &form.phases;
        for a in 1..=q {
            for b in 1..=q {
                for cc in 1..=q {
                    let got = c.m3_at(a - 1, b - 1, cc - 1);
                    let amp = 2.0 * r[a - 1] * r[b - 1] * r[cc - 1];
                    let expected = if a + b == cc {
                        amp * (phi[a - 1] + phi[b - 1] - phi[cc - 1]).cos()
                    } else if a + cc == b {
                        amp * (phi[a - 1] + phi[cc - 1] - phi[b - 1]).cos()
                    } else if b + cc == a {
                        amp * (phi[b - 1] + phi[cc - 1] - phi[a - 1]).cos()
                    } else if a + b + cc == p {
                        amp * (phi[a - 1] + phi[b - 1] + phi[cc - 1]).cos()
                    } else {
                        0.0
                    };
                    assert!(
                        (got - expected).abs() < 1e-12,
                        "triple ({a}, {b}, {cc}): {got} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn transfer_matches_direct_enumeration() {
        for p in [7usize, 13, 21] {
            let cm = CosineMatrix::new(p).unwrap();
            for trial in 0..5 {
                let s = random_signal(p, 100 + p as u64 * 10 + trial);
                let via_transfer = to_cosine(&population_moments(&s), &cm).unwrap();
                let direct = population_cosine_moments(&s);
                let scale2 = frobenius(&direct.m2).max(1.0);
                let scale3 = frobenius(&direct.m3).max(1.0);
                for (x, y) in via_transfer.t1_projected.iter().zip(&direct.t1_projected) {
                    assert!((x - y).abs() < 1e-10);
                }
                for (x, y) in via_transfer.m2.iter().zip(&direct.m2) {
                    assert!((x - y).abs() < 1e-10 * scale2, "p = {p} m2");
                }
                for (x, y) in via_transfer.m3.iter().zip(&direct.m3) {
                    assert!((x - y).abs() < 1e-10 * scale3, "p = {p} m3");
                }
            }
        }
    }

    #[test]
    fn population_moments_match_naive_shift_enumeration() {
        let p = 9;
        let q = 4;
        let s = random_signal(p, 4);
        let m = population_moments(&s);
        let mut t1 = vec![0.0; q];
        let mut t2 = vec![0.0; q * q];
        let mut t3 = vec![0.0; q * q * q];
        for l in 0..p {
            let x = projected_orbit_sample(&s, l);
            for a in 0..q {
                t1[a] += x[a] / p as f64;
                for b in 0..q {
                    t2[a * q + b] += x[a] * x[b] / p as f64;
                    for c in 0..q {
                        t3[(a * q + b) * q + c] += x[a] * x[b] * x[c] / p as f64;
                    }
                }
            }
        }
        for (x, y) in m.t1.iter().zip(&t1) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in m.t2.iter().zip(&t2) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in m.t3.iter().zip(&t3) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_moments_match_naive_loops() {
        let p = 9;
        let q = 4;
        let s = random_signal(p, 5);
        let batch = generate(&s, 20, 0.4, 17).unwrap();
        let m = empirical_moments(&batch);
        assert_eq!(m.kind, MomentKind::RawEmpirical);
        let n = batch.n() as f64;
        for a in 0..q {
            let mut acc = 0.0;
            for i in 0..batch.n() {
                acc += batch.sample(i)[a];
            }
            assert!((m.t1[a] - acc / n).abs() < 1e-12);
            for b in 0..q {
                let mut acc2 = 0.0;
                for i in 0..batch.n() {
                    acc2 += batch.sample(i)[a] * batch.sample(i)[b];
                }
                assert!((m.t2_at(a, b) - acc2 / n).abs() < 1e-12);
                for c in 0..q {
                    let mut acc3 = 0.0;
                    for i in 0..batch.n() {
                        let row = batch.sample(i);
                        acc3 += row[a] * row[b] * row[c];
                    }
                    assert!((m.t3_at(a, b, c) - acc3 / n).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn moment_tensors_are_symmetric() {
        let s = random_signal(13, 6);
        let batch = generate(&s, 50, 0.2, 3).unwrap();
        for m in [population_moments(&s), empirical_moments(&batch)] {
            let q = m.q;
            let scale = frobenius(&m.t3).max(1.0);
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(m.t2_at(a, b), m.t2_at(b, a));
                    for c in 0..q {
                        // Swapping the first two factors keeps the exact
                        // product; other permutations reassociate it.
                        assert_eq!(m.t3_at(a, b, c), m.t3_at(b, a, c));
                        assert!((m.t3_at(a, b, c) - m.t3_at(c, b, a)).abs() < 1e-14 * scale);
                        assert!((m.t3_at(a, b, c) - m.t3_at(a, c, b)).abs() < 1e-14 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn debias_requires_raw_empirical_kind() {
        let s = random_signal(13, 7);
        let population = population_moments(&s);
        assert!(matches!(debias(&population, 0.5), Err(Error::KindMismatch { .. })));
        let batch = generate(&s, 100, 0.5, 1).unwrap();
        let debiased = debias(&empirical_moments(&batch), 0.5).unwrap();
        assert_eq!(debiased.kind, MomentKind::DebiasedEmpirical);
        assert!(matches!(debias(&debiased, 0.5), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn debias_moves_second_moment_diagonal_toward_population() {
        let p = 13;
        let q = 6;
        let s = random_signal(p, 8);
        let pop = population_moments(&s);
        let sigma = 1.0;
        for seed in 0..20u64 {
            let batch = generate(&s, 10_000, sigma, 1000 + seed).unwrap();
            let raw = empirical_moments(&batch);
            let deb = debias(&raw, sigma).unwrap();
            let diag_gap = |m: &MomentSet| -> f64 {
                (0..q).map(|a| m.t2_at(a, a) - pop.t2_at(a, a)).sum::<f64>() / q as f64
            };
            assert!(
                diag_gap(&deb).abs() < diag_gap(&raw).abs(),
                "seed {seed}: debiased diagonal further from population than raw"
            );
        }
    }

    #[test]
    fn population_moments_are_dihedral_invariant() {
        let p = 7;
        let s = random_signal(p, 9);
        let base = population_moments(&s);
        let scale2 = frobenius(&base.t2).max(1.0);
        let scale3 = frobenius(&base.t3).max(1.0);
        for shift in 0..p {
            for reflected in [false, true] {
                let moved = DihedralElement::new(shift, reflected).apply(&s);
                let m = population_moments(&moved);
                for (x, y) in base.t1.iter().zip(&m.t1) {
                    assert!((x - y).abs() < 1e-12);
                }
                for (x, y) in base.t2.iter().zip(&m.t2) {
                    assert!((x - y).abs() < 1e-12 * scale2);
                }
                for (x, y) in base.t3.iter().zip(&m.t3) {
                    assert!((x - y).abs() < 1e-12 * scale3);
                }
            }
        }
    }

    #[test]
    fn to_cosine_rejects_nonuniform_population_first_moment() {
        let s = random_signal(13, 10);
        let cm = CosineMatrix::new(13).unwrap();
        let mut tampered = population_moments(&s);
        tampered.t1[0] += 0.1;
        assert!(matches!(
            to_cosine(&tampered, &cm),
            Err(Error::NonUniformFirstMoment { .. })
        ));
    }

    #[test]
    fn to_cosine_rejects_dimension_mismatch() {
        let s = random_signal(13, 11);
        let cm = CosineMatrix::new(7).unwrap();
        assert!(matches!(
            to_cosine(&population_moments(&s), &cm),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_route_amplifies_noise_beyond_time_route() {
        let p = 13;
        let sigma = 0.5;
        let cm = CosineMatrix::new(p).unwrap();
        let s = random_signal(p, 12);
        let pop_t = population_moments(&s);
        let pop_m = population_cosine_moments(&s);
        let mut t_errors = Vec::new();
        let mut m_errors = Vec::new();
        for seed in 0..20u64 {
            let batch = generate(&s, 5_000, sigma, 2000 + seed).unwrap();
            let deb = debias(&empirical_moments(&batch), sigma).unwrap();
            let m_hat = to_cosine(&deb, &cm).unwrap();
            let t_err: f64 = deb
                .t3
                .iter()
                .zip(&pop_t.t3)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
                / frobenius(&pop_t.t3);
            let m_err: f64 = m_hat
                .m3
                .iter()
                .zip(&pop_m.m3)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
                / frobenius(&pop_m.m3);
            t_errors.push(t_err);
            m_errors.push(m_err);
        }
        t_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        m_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median_t = t_errors[10];
        let median_m = m_errors[10];
        assert!(
            median_m > median_t,
            "cosine-side median error {median_m} not above time-side {median_t}"
        );
    }
}
