//! Constructive orbit recovery from second- and third-order moments.
//!
//! The pipeline runs in sequence: read the DC coefficient off the first
//! moment, read Fourier magnitudes off the second cosine moment's diagonal,
//! normalize third cosine moment entries into chain cosines `c_j` and
//! consistency cosines `d_j`, `d_star`, resolve the sign branch with one
//! quadruple decision followed by binary decisions, recover the anchor phase
//! up to a `p`-fold ambiguity, propagate the remaining phases, and assemble
//! the signal whose moments best match the input. Every step writes into a
//! [`RecoveryTrace`] so callers can audit the decisions and detect
//! near-degenerate inputs; degeneracy is flagged, never fatal, because
//! finite-sample callers need the branch anyway.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::moments::{
    frobenius, population_moments_from_values, to_cosine, CosineMatrix, CosineMomentSet,
    MomentKind, MomentSet,
};
use crate::signal::{wrap_phase, Signal, SpectralForm};

/// Tunable tolerances for the recovery pipeline. Defaults suit population
/// or large-sample input; noisy callers typically raise `r_min_relative`.
#[derive(Debug, Clone)]
pub struct RecoveryOptions {
    /// Absolute floor below which a recovered magnitude is treated as zero
    /// and recovery refuses to normalize by it.
    pub r_min: f64,
    /// Relative floor, as a fraction of the largest recovered magnitude.
    /// The effective floor is the larger of the two.
    pub r_min_relative: f64,
    /// Cosines may land outside [-1, 1] by up to this much without raising
    /// the clamp warning; larger excursions still clamp but are flagged.
    pub clamp_tolerance: f64,
    /// A branch decision whose winner/runner-up residual gap falls below
    /// this sets the degenerate flags of the signs it decided.
    pub separation_tolerance: f64,
    /// A `beta_j` within this distance of 0 or pi marks index `j` as
    /// degenerate (the sign of an angle that close to the axis is noise).
    pub beta_tolerance: f64,
    /// If even the best anchor candidate's moment residual exceeds this,
    /// the trace carries a warning that the reconstruction is suspect.
    pub residual_ceiling: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            r_min: 1e-8,
            r_min_relative: 0.0,
            clamp_tolerance: 1e-9,
            separation_tolerance: 1e-3,
            beta_tolerance: 1e-5,
            residual_ceiling: 1.0,
        }
    }
}

/// One sign-branch decision: the candidate residuals in enumeration order,
/// the winning index, and the winner/runner-up gap.
#[derive(Debug, Clone)]
pub struct BranchDecision {
    /// Number of candidate sign assignments examined (4 at the base step,
    /// 2 everywhere else).
    pub arity: usize,
    /// Residual of each candidate, in enumeration order.
    pub residuals: Vec<f64>,
    /// Index of the winning candidate; ties keep the earliest index.
    pub winner: usize,
    /// Runner-up residual minus winning residual.
    pub gap: f64,
    /// Set when the gap fell below the separation tolerance.
    pub flagged: bool,
}

impl BranchDecision {
    fn from_residuals(residuals: Vec<f64>, separation_tolerance: f64) -> Self {
        let mut winner = 0;
        for (index, residual) in residuals.iter().enumerate() {
            if *residual < residuals[winner] {
                winner = index;
            }
        }
        let runner_up = residuals
            .iter()
            .enumerate()
            .filter(|(index, _)| *index != winner)
            .map(|(_, residual)| *residual)
            .fold(f64::INFINITY, f64::min);
        let gap = runner_up - residuals[winner];
        Self {
            arity: residuals.len(),
            residuals,
            winner,
            gap,
            flagged: gap < separation_tolerance,
        }
    }
}

/// Everything the recovery pipeline computed along the way.
#[derive(Debug, Clone)]
pub struct RecoveryTrace {
    /// Number of retained frequencies.
    pub q: usize,
    /// Chain cosines `c_1..c_q`, clamped into [-1, 1].
    pub c: Vec<f64>,
    /// `beta_j = arccos(c_j)`, each in [0, pi].
    pub beta: Vec<f64>,
    /// Interior consistency cosines `d_2..d_{q-2}` (empty when q = 3).
    pub d: Vec<f64>,
    /// Endpoint consistency cosine.
    pub d_star: f64,
    /// Resolved sign branch, `eps_1 = +1`; empty until resolution runs.
    pub eps: Vec<i8>,
    /// The `p` admissible anchor phases; empty until anchor recovery runs.
    pub anchor_candidates: Vec<f64>,
    /// Per-frequency degeneracy markers: a near-axis `beta_j` or an
    /// ambiguous decision involving `eps_j` sets entry `j - 1`.
    pub degenerate_flags: Vec<bool>,
    /// Sign-branch decisions in the order they were taken.
    pub decisions: Vec<BranchDecision>,
    /// How many normalized cosines needed clamping into [-1, 1].
    pub clamp_count: usize,
    /// Largest clamped excursion beyond the interval.
    pub max_clamp_excess: f64,
    /// Set when some excursion exceeded the clamp tolerance.
    pub clamp_warning: bool,
    /// Moment residual of each anchor candidate's reconstruction.
    pub candidate_residuals: Vec<f64>,
    /// Index of the anchor candidate the reconstruction kept.
    pub chosen_anchor: Option<usize>,
    /// Set when even the best candidate residual exceeded the ceiling.
    pub residual_warning: bool,
}

/// DC Fourier coefficient from the first moment: the projected mean is the
/// constant vector `(2 / sqrt(p)) theta_hat[0] 1`, so averaging its entries
/// and scaling by `sqrt(p) / 2` inverts that.
pub fn recover_mean(m: &MomentSet) -> f64 {
    let p = 2 * m.q + 1;
    let mean = m.t1.iter().sum::<f64>() / m.q as f64;
    (p as f64).sqrt() / 2.0 * mean
}

/// Fourier magnitudes from the second cosine moment: its diagonal holds
/// `2 r_k^2`. Small negative diagonal entries (sampling noise) truncate to
/// zero; strongly negative ones mean the input moments are inconsistent.
pub fn recover_magnitudes(cm: &CosineMomentSet) -> Result<Vec<f64>> {
    let tolerance = 1e-6 * frobenius(&cm.m2);
    let mut r = Vec::with_capacity(cm.q);
    for k in 0..cm.q {
        let diagonal = cm.m2_at(k, k);
        if diagonal < -tolerance {
            return Err(Error::NegativeSecondMoment {
                k: k + 1,
                value: diagonal,
            });
        }
        r.push((diagonal.max(0.0) / 2.0).sqrt());
    }
    Ok(r)
}

fn clamp_unit(value: f64, count: &mut usize, max_excess: &mut f64) -> f64 {
    if value > 1.0 {
        *count += 1;
        *max_excess = max_excess.max(value - 1.0);
        1.0
    } else if value < -1.0 {
        *count += 1;
        *max_excess = max_excess.max(-1.0 - value);
        -1.0
    } else {
        value
    }
}

/// Normalizes third cosine moment entries into chain and consistency
/// cosines with default options. See [`extract_cosines_with`].
pub fn extract_cosines(cm: &CosineMomentSet, r: &[f64]) -> Result<RecoveryTrace> {
    extract_cosines_with(cm, r, &RecoveryOptions::default())
}

/// Normalizes third cosine moment entries into the chain cosines
/// `c_j = m3[1][j][j+1] / (2 r_1 r_j r_{j+1})` (with the wrapped endpoint
/// `c_q = m3[1][q][q] / (2 r_1 r_q^2)`, since 1 + q + q = p), the interior
/// consistency cosines `d_j = m3[2][j][j+2] / (2 r_2 r_j r_{j+2})`, and the
/// endpoint `d_star = m3[2][q-1][q] / (2 r_2 r_{q-1} r_q)`. Cosines clamp
/// into [-1, 1]; `beta_j = arccos(c_j)`. Any magnitude at or below the
/// floor is an error because the normalization would be meaningless.
pub fn extract_cosines_with(
    cm: &CosineMomentSet,
    r: &[f64],
    options: &RecoveryOptions,
) -> Result<RecoveryTrace> {
    let q = cm.q;
    if r.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: r.len(),
        });
    }
    let largest = r.iter().cloned().fold(0.0f64, f64::max);
    let floor = options.r_min.max(options.r_min_relative * largest);
    for (index, &value) in r.iter().enumerate() {
        if value <= floor {
            return Err(Error::VanishingMagnitude {
                k: index + 1,
                value,
                floor,
            });
        }
    }

    let mut clamp_count = 0usize;
    let mut max_clamp_excess = 0.0f64;

    let mut c = Vec::with_capacity(q);
    for j in 1..q {
        let raw = cm.m3_at(0, j - 1, j) / (2.0 * r[0] * r[j - 1] * r[j]);
        c.push(clamp_unit(raw, &mut clamp_count, &mut max_clamp_excess));
    }
    let raw_end = cm.m3_at(0, q - 1, q - 1) / (2.0 * r[0] * r[q - 1] * r[q - 1]);
    c.push(clamp_unit(raw_end, &mut clamp_count, &mut max_clamp_excess));

    let beta: Vec<f64> = c.iter().map(|value| value.acos()).collect();

    let mut d = Vec::new();
    for j in 2..=q.saturating_sub(2) {
        let raw = cm.m3_at(1, j - 1, j + 1) / (2.0 * r[1] * r[j - 1] * r[j + 1]);
        d.push(clamp_unit(raw, &mut clamp_count, &mut max_clamp_excess));
    }
    let raw_star = cm.m3_at(1, q - 2, q - 1) / (2.0 * r[1] * r[q - 2] * r[q - 1]);
    let d_star = clamp_unit(raw_star, &mut clamp_count, &mut max_clamp_excess);

    // An angle this close to the axis has an unreliable sign, which is
    // exactly the degeneracy the branch resolution cannot repair.
    let degenerate_flags: Vec<bool> = beta
        .iter()
        .map(|&angle| angle < options.beta_tolerance || PI - angle < options.beta_tolerance)
        .collect();

    Ok(RecoveryTrace {
        q,
        c,
        beta,
        d,
        d_star,
        eps: Vec::new(),
        anchor_candidates: Vec::new(),
        degenerate_flags,
        decisions: Vec::new(),
        clamp_count,
        max_clamp_excess,
        clamp_warning: max_clamp_excess > options.clamp_tolerance,
        candidate_residuals: Vec::new(),
        chosen_anchor: None,
        residual_warning: false,
    })
}

/// Residual of one candidate sign assignment against a consistency cosine.
/// Flipping every sign negates the angle and leaves the residual unchanged,
/// which is why recovery only ever determines the branch up to reflection.
pub(crate) fn consistency_residual(
    beta_1: f64,
    beta_a: f64,
    beta_b: f64,
    eps_1: i8,
    eps_a: i8,
    eps_b: i8,
    target: f64,
) -> f64 {
    let angle =
        -f64::from(eps_1) * beta_1 + f64::from(eps_a) * beta_a + f64::from(eps_b) * beta_b;
    (angle.cos() - target).abs()
}

/// Resolves the sign branch with default options. See
/// [`resolve_sign_branch_with`].
pub fn resolve_sign_branch(trace: &mut RecoveryTrace) -> Vec<i8> {
    resolve_sign_branch_with(trace, &RecoveryOptions::default())
}

/// Resolves the sign branch sequentially under the normalization
/// `eps_1 = +1`. The base step picks `(eps_2, eps_3)` as the argmin over
/// four candidate pairs of `|cos(-beta_1 + eps_2 beta_2 + eps_3 beta_3) -
/// d_2|` (for q = 3, where no interior cosine exists, the endpoint cosine
/// `d_star` plays the target and fixes both remaining signs). Each later
/// sign is a binary argmin against `d_{m-1}`, and `eps_q` against `d_star`.
/// Ties keep the earliest candidate; a gap below the separation tolerance
/// sets the degenerate flags of the signs that step decided. Total work is
/// one quadruple decision plus q - 3 binary decisions, never a `2^q`
/// branch enumeration.
pub fn resolve_sign_branch_with(trace: &mut RecoveryTrace, options: &RecoveryOptions) -> Vec<i8> {
    let q = trace.q;
    assert!(
        trace.beta.len() == q,
        "cosine extraction must run before sign resolution"
    );
    let mut eps = vec![1i8; q];
    let mut decisions = Vec::with_capacity(q - 2);

    let base_target = if q >= 4 { trace.d[0] } else { trace.d_star };
    let pairs = [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)];
    let residuals = pairs
        .iter()
        .map(|&(eps_2, eps_3)| {
            consistency_residual(
                trace.beta[0],
                trace.beta[1],
                trace.beta[2],
                1,
                eps_2,
                eps_3,
                base_target,
            )
        })
        .collect();
    let base = BranchDecision::from_residuals(residuals, options.separation_tolerance);
    let (eps_2, eps_3) = pairs[base.winner];
    eps[1] = eps_2;
    eps[2] = eps_3;
    if base.flagged {
        trace.degenerate_flags[1] = true;
        trace.degenerate_flags[2] = true;
    }
    decisions.push(base);

    // Interior signs eps_4..eps_{q-1} against d_3..d_{q-2}, then eps_q
    // against the endpoint cosine. For q = 3 both ranges are empty: the
    // base step already consumed d_star.
    for m in 4..=q {
        let target = if m < q { trace.d[m - 3] } else { trace.d_star };
        let previous = eps[m - 2];
        let candidates = [1i8, -1];
        let residuals = candidates
            .iter()
            .map(|&eps_m| {
                consistency_residual(
                    trace.beta[0],
                    trace.beta[m - 2],
                    trace.beta[m - 1],
                    1,
                    previous,
                    eps_m,
                    target,
                )
            })
            .collect();
        let decision = BranchDecision::from_residuals(residuals, options.separation_tolerance);
        eps[m - 1] = candidates[decision.winner];
        if decision.flagged {
            trace.degenerate_flags[m - 1] = true;
        }
        decisions.push(decision);
    }

    trace.decisions = decisions;
    trace.eps = eps.clone();
    eps
}

/// The `p` admissible anchor phases: the resolved branch pins `p phi_1`
/// modulo 2 pi via `p phi_1 = 2 sum_{t<q} eps_t beta_t + eps_q beta_q`, so
/// `phi_1` is known up to an added multiple of `2 pi / p`.
pub fn recover_anchor(trace: &RecoveryTrace) -> Vec<f64> {
    let q = trace.q;
    assert!(
        trace.eps.len() == q,
        "sign resolution must run before anchor recovery"
    );
    let p = 2 * q + 1;
    let mut pinned = 0.0;
    for t in 0..q - 1 {
        pinned += 2.0 * f64::from(trace.eps[t]) * trace.beta[t];
    }
    pinned += f64::from(trace.eps[q - 1]) * trace.beta[q - 1];
    let base = pinned / p as f64;
    (0..p)
        .map(|m| wrap_phase(base + TAU * m as f64 / p as f64))
        .collect()
}

/// Phases from an anchor: `phi_k = k anchor - sum_{t<k} eps_t beta_t`,
/// reduced mod 2 pi.
pub fn propagate_phases(anchor: f64, trace: &RecoveryTrace) -> Vec<f64> {
    assert!(
        trace.eps.len() == trace.q,
        "sign resolution must run before phase propagation"
    );
    let mut phases = Vec::with_capacity(trace.q);
    let mut correction = 0.0;
    for k in 1..=trace.q {
        phases.push(wrap_phase(k as f64 * anchor - correction));
        correction += f64::from(trace.eps[k - 1]) * trace.beta[k - 1];
    }
    phases
}

// Squared moment mismatch with each order's block scaled by the target's
// Frobenius norm, so no single tensor dominates by magnitude alone.
fn moment_loss(values: &[f64], target: &MomentSet) -> f64 {
    let model = population_moments_from_values(values);
    let blocks = [
        (&model.t1, &target.t1),
        (&model.t2, &target.t2),
        (&model.t3, &target.t3),
    ];
    let mut total = 0.0;
    for (model_block, target_block) in blocks {
        let norm = frobenius(target_block);
        let scale = if norm > 0.0 { norm * norm } else { 1.0 };
        let mismatch: f64 = model_block
            .iter()
            .zip(target_block.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += mismatch / scale;
    }
    total
}

/// Full recovery with default options. See [`reconstruct_with`].
pub fn reconstruct(m: &MomentSet) -> Result<(Signal, RecoveryTrace)> {
    reconstruct_with(m, &RecoveryOptions::default())
}

/// Runs the whole pipeline on population or debiased moments: mean,
/// cosine transfer, magnitudes, cosine extraction, sign resolution, anchor
/// recovery, then one reconstruction per anchor candidate. Returns the
/// candidate whose moments best match the input (deterministic argmin,
/// earliest index on ties) together with the full trace. On population
/// input every candidate is a cyclic shift of the same orbit and all
/// residuals are equally tiny; the argmin only matters for noisy input.
pub fn reconstruct_with(
    m: &MomentSet,
    options: &RecoveryOptions,
) -> Result<(Signal, RecoveryTrace)> {
    match m.kind {
        MomentKind::Population | MomentKind::DebiasedEmpirical => {}
        MomentKind::RawEmpirical => {
            return Err(Error::KindMismatch {
                expected: "population or debiased-empirical",
                got: m.kind.label(),
            });
        }
    }
    let p = 2 * m.q + 1;
    let cosine_matrix = CosineMatrix::new(p)?;
    let cosine = to_cosine(m, &cosine_matrix)?;
    let mean_coefficient = recover_mean(m);
    let r = recover_magnitudes(&cosine)?;
    let mut trace = extract_cosines_with(&cosine, &r, options)?;
    resolve_sign_branch_with(&mut trace, options);
    trace.anchor_candidates = recover_anchor(&trace);

    let mut residuals = Vec::with_capacity(p);
    let mut best: Option<(usize, f64, Signal)> = None;
    for (index, &anchor) in trace.anchor_candidates.iter().enumerate() {
        let phases = propagate_phases(anchor, &trace);
        let spectral = SpectralForm::new(p, mean_coefficient, r.clone(), phases)?;
        let candidate = spectral.to_signal()?;
        let residual = moment_loss(candidate.values(), m);
        residuals.push(residual);
        let improves = match &best {
            None => true,
            Some((_, current, _)) => residual < *current,
        };
        if improves {
            best = Some((index, residual, candidate));
        }
    }
    let (chosen, best_residual, signal) = best.expect("at least seven anchor candidates");
    trace.candidate_residuals = residuals;
    trace.chosen_anchor = Some(chosen);
    trace.residual_warning = best_residual > options.residual_ceiling;
    Ok((signal, trace))
}
