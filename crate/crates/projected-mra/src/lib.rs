//! Signal recovery from projected random cyclic shifts.
//!
//! An unknown real signal of odd length `p = 2q + 1` is observed many times;
//! each observation applies an unknown uniformly random cyclic shift, keeps
//! only the `q` symmetric coordinate sums `v[j] + v[p - j]`, and adds white
//! Gaussian noise. Because the projection identifies a shifted signal with
//! its shifted reflection, the signal is only identifiable up to the
//! dihedral group generated by shifts and reflection, and the recovery
//! target is that orbit.
//!
//! The crate provides:
//!
//! - [`signal`]: signals on the cyclic index set, the dihedral action, the
//!   unitary discrete Fourier transform, and the polar spectral form.
//! - [`model`]: the observation model and seeded batch generation.
//! - [`moments`]: population and empirical moment tensors of the projected
//!   observations, noise debiasing, and the change of basis to
//!   Fourier-cosine coordinates.
//! - [`recovery`]: closed-form orbit recovery from exact moments.
//! - [`estimators`]: expectation-maximization and moment-matching fits for
//!   noisy data, on top of a small Levenberg-Marquardt solver.
//! - [`bench`]: a deterministic Monte Carlo harness comparing estimators
//!   across noise levels, with CSV output and summary statistics.

pub mod bench;
pub mod error;
pub mod estimators;
pub mod model;
pub mod moments;
pub mod recovery;
pub mod rng;
pub mod signal;

pub use bench::{ExperimentConfig, Method, SummaryRow, TrialRecord};
pub use error::{Error, Result};
pub use estimators::{EmConfig, FitResult, Jacobian, OptConfig, Termination};
pub use model::ObservationBatch;
pub use moments::{CosineMatrix, CosineMomentSet, MomentKind, MomentSet};
pub use recovery::{RecoveryOptions, RecoveryTrace};
pub use signal::{DihedralElement, Signal, SpectralForm};
