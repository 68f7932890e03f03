//! Signals on a cyclic index set and the dihedral symmetries acting on them.
//!
//! A [`Signal`] holds `p` real values indexed by residues modulo `p`, with
//! `p` odd and at least 7; `q = (p - 1) / 2` counts the distinct nonzero
//! frequency pairs. The group elements are `shift` composed with an optional
//! reflection about index 0, written so that the reflection is applied
//! first: `(g s)[m] = s[shift - m]` for a reflected element and
//! `(g s)[m] = s[m - shift]` otherwise.
//!
//! The discrete Fourier transform used throughout is unitary,
//! `x_hat[k] = p^{-1/2} * sum_n x[n] * exp(-2*pi*i*k*n/p)`, so norms are
//! preserved, a shift by `l` multiplies `x_hat[k]` by `exp(-2*pi*i*k*l/p)`,
//! and the reflection conjugates the spectrum.
//!
//! # Example
//!
//! ```
//! use projected_mra::signal::{dft, DihedralElement, Signal};
//!
//! let s = Signal::new(vec![1.0, 2.0, 0.0, -1.0, 0.5, 0.0, 3.0]).unwrap();
//! let g = DihedralElement::new(2, true);
//! let moved = g.apply(&s);
//! // Group elements permute values, so norms are untouched.
//! assert_eq!(s.norm(), moved.norm());
//! // The spectrum magnitude at each frequency is orbit invariant.
//! let a = dft(s.values());
//! let b = dft(moved.values());
//! for k in 0..7 {
//!     assert!((a[k].norm() - b[k].norm()).abs() < 1e-12);
//! }
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A real signal on `{0, 1, .., p - 1}` with `p` odd and `p >= 7`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    /// Wraps a value vector, enforcing odd length at least 7 and finiteness.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let p = values.len();
        if p < 7 || p % 2 == 0 {
            return Err(Error::InvalidLength(p));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "signal values" });
        }
        Ok(Self { values })
    }

    /// Number of samples `p`.
    pub fn p(&self) -> usize {
        self.values.len()
    }

    /// Number of distinct nonzero frequencies, `q = (p - 1) / 2`.
    pub fn q(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    /// The underlying values, indexed by residue.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at an arbitrary integer index, reduced modulo `p`.
    pub fn value_mod(&self, index: i64) -> f64 {
        let p = self.values.len() as i64;
        self.values[index.rem_euclid(p) as usize]
    }

    /// Euclidean norm of the value vector.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One element of the dihedral group of order `2p`: a cyclic shift, with an
/// optional reflection about index 0 applied before the shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DihedralElement {
    /// Shift amount, interpreted modulo the signal length.
    pub shift: usize,
    /// Whether the reflection `m -> -m` is applied before shifting.
    pub reflected: bool,
}

impl DihedralElement {
    /// The identity element.
    pub fn identity() -> Self {
        Self { shift: 0, reflected: false }
    }

    /// A shift by `shift`, reflected first when `reflected` is set.
    pub fn new(shift: usize, reflected: bool) -> Self {
        Self { shift, reflected }
    }

    /// Applies the element to a signal.
    pub fn apply(&self, s: &Signal) -> Signal {
        let p = s.p() as i64;
        let shift = self.shift as i64;
        let values = (0..p)
            .map(|m| {
                if self.reflected {
                    s.value_mod(shift - m)
                } else {
                    s.value_mod(m - shift)
                }
            })
            .collect();
        Signal { values }
    }

    /// Group composition: `a.compose(b, p)` acts like `a` after `b`.
    pub fn compose(&self, other: &Self, p: usize) -> Self {
        let p = p as i64;
        let sign = if self.reflected { -1 } else { 1 };
        let shift = (self.shift as i64 + sign * other.shift as i64).rem_euclid(p) as usize;
        Self { shift, reflected: self.reflected ^ other.reflected }
    }

    /// The inverse element.
    pub fn inverse(&self, p: usize) -> Self {
        if self.reflected {
            *self
        } else {
            Self { shift: (p - self.shift % p) % p, reflected: false }
        }
    }
}

/// The full orbit of a signal under shifts and reflected shifts, `2p`
/// members: the `p` shifts first, then the `p` reflected shifts.
pub fn orbit(s: &Signal) -> Vec<Signal> {
    let p = s.p();
    let mut members = Vec::with_capacity(2 * p);
    for reflected in [false, true] {
        for shift in 0..p {
            members.push(DihedralElement::new(shift, reflected).apply(s));
        }
    }
    members
}

/// Euclidean distance between `a` and the orbit of `b`: the smallest
/// `|a - g b|` over all `2p` group elements `g`.
///
/// This vanishes exactly when the two signals are dihedrally equivalent,
/// and is symmetric in its arguments.
pub fn orbit_distance(a: &Signal, b: &Signal) -> Result<f64> {
    if a.p() != b.p() {
        return Err(Error::DimensionMismatch { expected: a.p(), got: b.p() });
    }
    let mut best = f64::INFINITY;
    for member in orbit(b) {
        let d2: f64 = a
            .values
            .iter()
            .zip(&member.values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        best = best.min(d2.sqrt());
    }
    Ok(best)
}

/// Unitary discrete Fourier transform of a real vector.
pub fn dft(values: &[f64]) -> Vec<Complex64> {
    let p = values.len();
    let scale = 1.0 / (p as f64).sqrt();
    let twiddle: Vec<Complex64> = (0..p)
        .map(|t| Complex64::from_polar(1.0, -std::f64::consts::TAU * t as f64 / p as f64))
        .collect();
    (0..p)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &x) in values.iter().enumerate() {
                acc += x * twiddle[(k * n) % p];
            }
            acc * scale
        })
        .collect()
}

/// Unitary inverse discrete Fourier transform.
pub fn idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let p = spectrum.len();
    let scale = 1.0 / (p as f64).sqrt();
    let twiddle: Vec<Complex64> = (0..p)
        .map(|t| Complex64::from_polar(1.0, std::f64::consts::TAU * t as f64 / p as f64))
        .collect();
    (0..p)
        .map(|n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &z) in spectrum.iter().enumerate() {
                acc += z * twiddle[(k * n) % p];
            }
            acc * scale
        })
        .collect()
}

/// Polar description of a real signal's spectrum: the DC coefficient plus
/// magnitude and phase at frequencies `1..=q`. The conjugate half of the
/// spectrum is implied by realness.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralForm {
    p: usize,
    /// DC Fourier coefficient, `sum(values) / sqrt(p)`.
    pub mean: f64,
    /// Magnitudes at frequencies `1..=q`; entry `k - 1` holds frequency `k`.
    pub magnitudes: Vec<f64>,
    /// Phases at frequencies `1..=q`, each reduced to `[0, 2*pi)`.
    pub phases: Vec<f64>,
}

pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut w = phi % tau;
    if w < 0.0 {
        w += tau;
    }
    // The remainder can land exactly on tau after rounding.
    if w >= tau {
        w = 0.0;
    }
    w
}

impl SpectralForm {
    /// Builds a spectral form from explicit components.
    pub fn new(p: usize, mean: f64, magnitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if p < 7 || p % 2 == 0 {
            return Err(Error::InvalidLength(p));
        }
        let q = (p - 1) / 2;
        if magnitudes.len() != q {
            return Err(Error::DimensionMismatch { expected: q, got: magnitudes.len() });
        }
        if phases.len() != q {
            return Err(Error::DimensionMismatch { expected: q, got: phases.len() });
        }
        if !mean.is_finite()
            || magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0)
            || phases.iter().any(|f| !f.is_finite())
        {
            return Err(Error::NonFinite { context: "spectral components" });
        }
        let phases = phases.into_iter().map(wrap_phase).collect();
        Ok(Self { p, mean, magnitudes, phases })
    }

    /// Reads the spectral form off a signal's DFT.
    pub fn from_signal(s: &Signal) -> Self {
        let spectrum = dft(s.values());
        let q = s.q();
        let mut magnitudes = Vec::with_capacity(q);
        let mut phases = Vec::with_capacity(q);
        for k in 1..=q {
            magnitudes.push(spectrum[k].norm());
            phases.push(wrap_phase(spectrum[k].arg()));
        }
        Self { p: s.p(), mean: spectrum[0].re, magnitudes, phases }
    }

    /// Signal length `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Frequency count `q`.
    pub fn q(&self) -> usize {
        (self.p - 1) / 2
    }

    /// Assembles the conjugate-symmetric spectrum and inverts it back to a
    /// real signal. Fails if the inverse transform leaves more than a
    /// `1e-10` relative imaginary residue, which would mean the components
    /// do not describe a real signal.
    pub fn to_signal(&self) -> Result<Signal> {
        let p = self.p;
        let q = self.q();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); p];
        spectrum[0] = Complex64::new(self.mean, 0.0);
        for k in 1..=q {
            let z = Complex64::from_polar(self.magnitudes[k - 1], self.phases[k - 1]);
            spectrum[k] = z;
            spectrum[p - k] = z.conj();
        }
        let complex_values = idft(&spectrum);
        let scale = complex_values
            .iter()
            .map(|z| z.norm())
            .fold(1.0_f64, f64::max);
        let residue = complex_values
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0_f64, f64::max)
            / scale;
        if residue > 1e-10 {
            return Err(Error::ImaginaryResidue { residue });
        }
        Signal::new(complex_values.iter().map(|z| z.re).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn random_signal(p: usize, seed: u64) -> Signal {
        let mut r = rng::stream(seed);
        let mut values = vec![0.0; p];
        rng::fill_standard_normal(&mut r, &mut values);
        Signal::new(values).unwrap()
    }

    #[test]
    fn signal_new_rejects_bad_lengths_and_values() {
        assert!(matches!(Signal::new(vec![0.0; 6]), Err(Error::InvalidLength(6))));
        assert!(matches!(Signal::new(vec![0.0; 5]), Err(Error::InvalidLength(5))));
        assert!(matches!(
            Signal::new(vec![1.0, 2.0, f64::NAN, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(Signal::new(vec![0.0; 7]).is_ok());
    }

    #[test]
    fn dft_matches_direct_summation_oracle() {
        let s = random_signal(13, 1);
        let fast = dft(s.values());
        let p = 13usize;
        for k in 0..p {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &x) in s.values().iter().enumerate() {
                let angle = -std::f64::consts::TAU * (k as f64) * (n as f64) / p as f64;
                acc += Complex64::new(x * angle.cos(), x * angle.sin());
            }
            acc /= (p as f64).sqrt();
            assert!((fast[k] - acc).norm() < 1e-12, "frequency {k} mismatch");
        }
    }

    #[test]
    fn shift_multiplies_spectrum_by_phase() {
        for p in [7usize, 13] {
            let s = random_signal(p, 2);
            let base = dft(s.values());
            for l in 0..p {
                let shifted = DihedralElement::new(l, false).apply(&s);
                let spec = dft(shifted.values());
                for k in 0..p {
                    let phase = Complex64::from_polar(
                        1.0,
                        -std::f64::consts::TAU * (k as f64) * (l as f64) / p as f64,
                    );
                    assert!((spec[k] - base[k] * phase).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reflection_conjugates_spectrum() {
        let s = random_signal(13, 3);
        let base = dft(s.values());
        let reflected = DihedralElement::new(0, true).apply(&s);
        let spec = dft(reflected.values());
        for k in 0..13 {
            assert!((spec[k] - base[k].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn group_action_composes_exactly() {
        let p = 7;
        let s = random_signal(p, 4);
        for shift_a in 0..p {
            for ref_a in [false, true] {
                for shift_b in 0..p {
                    for ref_b in [false, true] {
                        let a = DihedralElement::new(shift_a, ref_a);
                        let b = DihedralElement::new(shift_b, ref_b);
                        let sequential = a.apply(&b.apply(&s));
                        let composed = a.compose(&b, p).apply(&s);
                        // Permutations of the same values: exact equality.
                        assert_eq!(sequential.values(), composed.values());
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let p = 7;
        for shift in 0..p {
            for reflected in [false, true] {
                let g = DihedralElement::new(shift, reflected);
                assert_eq!(g.compose(&g.inverse(p), p), DihedralElement::identity());
                assert_eq!(g.inverse(p).compose(&g, p), DihedralElement::identity());
            }
        }
    }

    #[test]
    fn orbit_of_generic_signal_has_2p_distinct_members() {
        let p = 7;
        let s = random_signal(p, 5);
        let members = orbit(&s);
        assert_eq!(members.len(), 2 * p);
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                let d: f64 = members[i]
                    .values()
                    .iter()
                    .zip(members[j].values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                assert!(d > 1e-12, "members {i} and {j} coincide");
            }
        }
    }

    #[test]
    fn orbit_distance_is_zero_on_members_and_orbit_invariant() {
        let p = 7;
        let a = random_signal(p, 6);
        let b = random_signal(p, 7);
        let base = orbit_distance(&a, &b).unwrap();
        for g_shift in 0..p {
            for g_ref in [false, true] {
                let g = DihedralElement::new(g_shift, g_ref);
                let moved = g.apply(&b);
                assert_eq!(orbit_distance(&a, &moved).unwrap(), base);
                assert!(orbit_distance(&moved, &b).unwrap() < 1e-12);
            }
        }
        // Symmetry of the orbit distance.
        assert!((orbit_distance(&a, &b).unwrap() - orbit_distance(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn orbit_distance_rejects_mismatched_lengths() {
        let a = random_signal(7, 8);
        let b = random_signal(13, 9);
        assert!(matches!(
            orbit_distance(&a, &b),
            Err(Error::DimensionMismatch { expected: 7, got: 13 })
        ));
    }

    #[test]
    fn spectral_form_round_trips() {
        for p in [7usize, 13, 21] {
            let s = random_signal(p, 10 + p as u64);
            let form = SpectralForm::from_signal(&s);
            let back = form.to_signal().unwrap();
            for (x, y) in s.values().iter().zip(back.values()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_mean_is_scaled_signal_mean() {
        let s = random_signal(13, 11);
        let form = SpectralForm::from_signal(&s);
        let expected = s.values().iter().sum::<f64>() / (13.0_f64).sqrt();
        assert!((form.mean - expected).abs() < 1e-12);
    }

    #[test]
    fn spectral_new_validates_components() {
        assert!(SpectralForm::new(13, 0.0, vec![1.0; 6], vec![0.0; 6]).is_ok());
        assert!(SpectralForm::new(13, 0.0, vec![1.0; 5], vec![0.0; 6]).is_err());
        assert!(SpectralForm::new(13, 0.0, vec![-1.0; 6], vec![0.0; 6]).is_err());
        assert!(SpectralForm::new(8, 0.0, vec![1.0; 3], vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn dft_round_trip_and_unitarity(values in proptest::collection::vec(-10.0f64..10.0, 13)) {
            let spectrum = dft(&values);
            let back = idft(&spectrum);
            for (x, z) in values.iter().zip(&back) {
                prop_assert!((x - z.re).abs() < 1e-12);
                prop_assert!(z.im.abs() < 1e-12);
            }
            let norm_time: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            let norm_freq: f64 = spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((norm_time - norm_freq).abs() < 1e-10);
        }

        #[test]
        fn orbit_distance_vanishes_exactly_on_orbit(
            values in proptest::collection::vec(-5.0f64..5.0, 7),
            shift in 0usize..7,
            reflected in proptest::bool::ANY,
        ) {
            let s = Signal::new(values).unwrap();
            let g = DihedralElement::new(shift, reflected);
            prop_assert_eq!(orbit_distance(&g.apply(&s), &s).unwrap(), 0.0);
        }
    }
}
