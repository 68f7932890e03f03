//! Finite-sample estimators: expectation-maximization under the projected
//! shift model, and direct least-squares fits against the debiased moment
//! tensors in time coordinates (`fit_t`) or cosine coordinates (`fit_m`),
//! all built on a small embedded Levenberg-Marquardt solver.
//!
//! Every estimator is multi-start: initial iterates are independent
//! unit-norm Gaussian vectors drawn from streams keyed by `(seed, start)`,
//! and the winner is chosen deterministically (largest final
//! log-likelihood for EM, smallest objective for the fits, earliest start
//! on ties). Estimators never see the ground truth; orbit alignment for
//! scoring is the caller's business.

use std::f64::consts::TAU;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{projected_orbit_samples, ObservationBatch};
use crate::moments::{
    frobenius, population_cosine_moments_from_values, population_moments_from_values, to_cosine,
    CosineMatrix, CosineMomentSet, MomentKind, MomentSet,
};
use crate::rng;
use crate::signal::Signal;

/// Finite-difference scheme used for the solver's Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jacobian {
    /// One extra residual evaluation per coordinate.
    Forward,
    /// Two extra evaluations per coordinate, second-order accurate.
    Central,
}

/// Why an optimization run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The residual was exactly zero at the starting point.
    ZeroResidual,
    /// Relative objective decrease fell below the function tolerance.
    ObjectiveDecrease,
    /// Relative step norm fell below the step tolerance.
    StepSize,
    /// Iteration budget exhausted.
    IterationLimit,
    /// Residual-evaluation budget exhausted.
    EvaluationLimit,
    /// Damping grew without producing an acceptable step.
    Stalled,
    /// Relative iterate change fell below the EM tolerance.
    IterateChange,
}

/// Settings for the least-squares fits and the underlying solver.
#[derive(Debug, Clone)]
pub struct OptConfig {
    /// Number of random initializations.
    pub starts: usize,
    /// Accepted-step budget per start.
    pub max_iters: usize,
    /// Residual-evaluation budget per start, finite differences included.
    pub max_fun_evals: usize,
    /// Stop when the relative objective decrease drops below this.
    pub fun_tol: f64,
    /// Stop when the relative step norm drops below this.
    pub step_tol: f64,
    /// Master seed for the initialization streams.
    pub seed: u64,
    /// Jacobian scheme.
    pub jacobian: Jacobian,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            starts: 20,
            max_iters: 300,
            max_fun_evals: 3000,
            fun_tol: 1e-10,
            step_tol: 1e-10,
            seed: 0,
            jacobian: Jacobian::Forward,
        }
    }
}

impl OptConfig {
    fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_iters == 0 || self.max_fun_evals == 0 {
            return Err(Error::InvalidConfig(
                "starts, max_iters, and max_fun_evals must all be at least 1".into(),
            ));
        }
        if !(self.fun_tol > 0.0 && self.fun_tol.is_finite())
            || !(self.step_tol > 0.0 && self.step_tol.is_finite())
        {
            return Err(Error::InvalidConfig(
                "fun_tol and step_tol must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Settings for expectation-maximization.
#[derive(Debug, Clone)]
pub struct EmConfig {
    /// Number of random initializations.
    pub starts: usize,
    /// Iteration budget per start.
    pub max_iters: usize,
    /// Stop when the relative iterate change drops below this.
    pub rel_tol: f64,
    /// Master seed for the initialization streams.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            starts: 5,
            max_iters: 2000,
            rel_tol: 1e-8,
            seed: 0,
        }
    }
}

impl EmConfig {
    fn validate(&self) -> Result<()> {
        if self.starts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig(
                "starts and max_iters must be at least 1".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(
                "rel_tol must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Extra information accumulated during a fit.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    /// Per-iteration objective of the winning start (marginal
    /// log-likelihood for EM, sum of squared residuals for the fits).
    pub objective_trace: Vec<f64>,
    /// The same trace for every start, indexed by start.
    pub start_traces: Vec<Vec<f64>>,
    /// How many M-step solves needed the Tikhonov fallback (EM only).
    pub tikhonov_regularizations: usize,
    /// How many zero-norm target blocks had their normalizer replaced by 1.
    pub zero_norm_blocks: usize,
    /// Residual evaluations summed across starts (fits only).
    pub function_evaluations: usize,
    /// Why the winning start stopped.
    pub termination: Termination,
}

/// Outcome of one estimator run: the winning start's estimate plus
/// diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// The estimated signal, unaligned.
    pub estimate: Signal,
    /// Final objective of the winning start (log-likelihood for EM).
    pub objective: f64,
    /// Iterations the winning start used.
    pub iterations: usize,
    /// Which initialization won.
    pub start_index: usize,
    /// Traces and counters.
    pub diagnostics: FitDiagnostics,
}

/// Outcome of a single Levenberg-Marquardt run.
#[derive(Debug, Clone)]
pub struct LmOutcome {
    /// Final iterate.
    pub x: Vec<f64>,
    /// Final sum of squared residuals.
    pub objective: f64,
    /// Accepted steps.
    pub iterations: usize,
    /// Residual evaluations, finite-difference probes included.
    pub evaluations: usize,
    /// Objective after the start and after each accepted step;
    /// nonincreasing by construction.
    pub trace: Vec<f64>,
    /// Why the run stopped.
    pub termination: Termination,
}

fn sum_of_squares(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

// Compensated summation keeps the log-likelihood's rounding noise below
// the monotonicity slack even for large batches.
struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    fn add(&mut self, value: f64) {
        let adjusted = value - self.compensation;
        let next = self.sum + adjusted;
        self.compensation = (next - self.sum) - adjusted;
        self.sum = next;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

/// Damped Gauss-Newton with finite-difference Jacobians. The damping
/// parameter starts at `1e-3` times the largest diagonal of `J^T J`,
/// shrinks tenfold after each accepted step, and grows tenfold after each
/// rejection; rejected steps never update the iterate, so the objective
/// trace is nonincreasing. A non-finite residual at the start point is an
/// error; one produced mid-run is treated as a rejected step.
pub fn levenberg_marquardt<F>(residual: F, x0: &[f64], cfg: &OptConfig) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut evaluations = 1usize;
    let mut r = residual(&x);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResidual);
    }
    let mut objective = sum_of_squares(&r);
    let mut trace = vec![objective];
    if objective == 0.0 {
        return Ok(LmOutcome {
            x,
            objective,
            iterations: 0,
            evaluations,
            trace,
            termination: Termination::ZeroResidual,
        });
    }

    let mut lambda: Option<f64> = None;
    let mut iterations = 0usize;
    let mut termination = Termination::IterationLimit;

    'outer: while iterations < cfg.max_iters {
        let m = r.len();
        let probes = match cfg.jacobian {
            Jacobian::Forward => dim,
            Jacobian::Central => 2 * dim,
        };
        if evaluations + probes > cfg.max_fun_evals {
            termination = Termination::EvaluationLimit;
            break;
        }
        let mut jac = DMatrix::zeros(m, dim);
        let mut probe = x.clone();
        for i in 0..dim {
            let h = f64::EPSILON.sqrt() * (1.0 + x[i].abs());
            match cfg.jacobian {
                Jacobian::Forward => {
                    probe[i] = x[i] + h;
                    let forward = residual(&probe);
                    evaluations += 1;
                    for k in 0..m {
                        jac[(k, i)] = (forward[k] - r[k]) / h;
                    }
                }
                Jacobian::Central => {
                    probe[i] = x[i] + h;
                    let forward = residual(&probe);
                    probe[i] = x[i] - h;
                    let backward = residual(&probe);
                    evaluations += 2;
                    for k in 0..m {
                        jac[(k, i)] = (forward[k] - backward[k]) / (2.0 * h);
                    }
                }
            }
            probe[i] = x[i];
        }
        if jac.iter().any(|v| !v.is_finite()) {
            termination = Termination::Stalled;
            break;
        }

        let jtj = jac.transpose() * &jac;
        let gradient = jac.transpose() * DVector::from_column_slice(&r);
        let max_diagonal = (0..dim).map(|i| jtj[(i, i)]).fold(0.0f64, f64::max);
        let damping = lambda.get_or_insert(1e-3 * max_diagonal.max(f64::MIN_POSITIVE));
        let stall_ceiling = 1e16 * (max_diagonal + 1.0);

        loop {
            let mut damped = jtj.clone();
            for i in 0..dim {
                damped[(i, i)] += *damping;
            }
            let step = match Cholesky::new(damped) {
                Some(factor) => factor.solve(&(-&gradient)),
                None => {
                    *damping *= 10.0;
                    if *damping > stall_ceiling {
                        termination = Termination::Stalled;
                        break 'outer;
                    }
                    continue;
                }
            };
            if evaluations + 1 > cfg.max_fun_evals {
                termination = Termination::EvaluationLimit;
                break 'outer;
            }
            let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let trial = residual(&candidate);
            evaluations += 1;
            let trial_objective = if trial.iter().all(|v| v.is_finite()) {
                sum_of_squares(&trial)
            } else {
                f64::INFINITY
            };
            if trial_objective < objective {
                let decrease = (objective - trial_objective) / objective;
                let step_norm = step.norm() / (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt());
                x = candidate;
                r = trial;
                objective = trial_objective;
                *damping /= 10.0;
                iterations += 1;
                trace.push(objective);
                if decrease < cfg.fun_tol {
                    termination = Termination::ObjectiveDecrease;
                    break 'outer;
                }
                if step_norm < cfg.step_tol {
                    termination = Termination::StepSize;
                    break 'outer;
                }
                break;
            }
            *damping *= 10.0;
            if *damping > stall_ceiling {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }

    Ok(LmOutcome {
        x,
        objective,
        iterations,
        evaluations,
        trace,
        termination,
    })
}

fn require_fit_kind(kind: MomentKind) -> Result<()> {
    match kind {
        MomentKind::Population | MomentKind::DebiasedEmpirical => Ok(()),
        MomentKind::RawEmpirical => Err(Error::KindMismatch {
            expected: "population or debiased-empirical",
            got: kind.label(),
        }),
    }
}

// A zero-norm target block cannot normalize anything; fall back to 1 and
// let the caller surface the count.
fn block_scale(block: &[f64]) -> (f64, usize) {
    let norm = frobenius(block);
    if norm > 0.0 {
        (norm, 0)
    } else {
        (1.0, 1)
    }
}

fn push_scaled_difference(out: &mut Vec<f64>, model: &[f64], target: &[f64], scale: f64) {
    for (a, b) in model.iter().zip(target.iter()) {
        out.push((a - b) / scale);
    }
}

/// Residual of the time-coordinate moment match: the three moment tensors
/// of the candidate minus the targets, each block divided by the target's
/// Frobenius norm, stacked into one vector.
struct TimeResidual {
    target: MomentSet,
    scales: [f64; 3],
}

impl TimeResidual {
    fn new(target: &MomentSet) -> (Self, usize) {
        let (s1, z1) = block_scale(&target.t1);
        let (s2, z2) = block_scale(&target.t2);
        let (s3, z3) = block_scale(&target.t3);
        (
            Self {
                target: target.clone(),
                scales: [s1, s2, s3],
            },
            z1 + z2 + z3,
        )
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let model = population_moments_from_values(x);
        let q = self.target.q;
        let mut out = Vec::with_capacity(q + q * q + q * q * q);
        push_scaled_difference(&mut out, &model.t1, &self.target.t1, self.scales[0]);
        push_scaled_difference(&mut out, &model.t2, &self.target.t2, self.scales[1]);
        push_scaled_difference(&mut out, &model.t3, &self.target.t3, self.scales[2]);
        out
    }
}

/// Residual of the cosine-coordinate moment match: the first-order block
/// stays in projected coordinates, the second and third are compared in
/// cosine coordinates.
struct CosineResidual {
    target: CosineMomentSet,
    scales: [f64; 3],
}

impl CosineResidual {
    fn new(target: &CosineMomentSet) -> (Self, usize) {
        let (s1, z1) = block_scale(&target.t1_projected);
        let (s2, z2) = block_scale(&target.m2);
        let (s3, z3) = block_scale(&target.m3);
        (
            Self {
                target: target.clone(),
                scales: [s1, s2, s3],
            },
            z1 + z2 + z3,
        )
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let model = population_cosine_moments_from_values(x);
        let q = self.target.q;
        let mut out = Vec::with_capacity(q + q * q + q * q * q);
        push_scaled_difference(
            &mut out,
            &model.t1_projected,
            &self.target.t1_projected,
            self.scales[0],
        );
        push_scaled_difference(&mut out, &model.m2, &self.target.m2, self.scales[1]);
        push_scaled_difference(&mut out, &model.m3, &self.target.m3, self.scales[2]);
        out
    }
}

fn multi_start_fit<F>(
    residual: F,
    p: usize,
    cfg: &OptConfig,
    zero_norm_blocks: usize,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    cfg.validate()?;
    let mut start_traces = Vec::with_capacity(cfg.starts);
    let mut total_evaluations = 0usize;
    let mut best: Option<(usize, LmOutcome)> = None;
    for start in 0..cfg.starts {
        let mut stream = rng::stream(rng::derive_seed(cfg.seed, &[start as u64]));
        let x0 = rng::unit_norm_gaussian(&mut stream, p);
        let outcome = levenberg_marquardt(&residual, &x0, cfg)?;
        total_evaluations += outcome.evaluations;
        start_traces.push(outcome.trace.clone());
        let improves = match &best {
            None => true,
            Some((_, current)) => outcome.objective < current.objective,
        };
        if improves {
            best = Some((start, outcome));
        }
    }
    let (start_index, outcome) = best.expect("at least one start");
    Ok(FitResult {
        estimate: Signal::new(outcome.x)?,
        objective: outcome.objective,
        iterations: outcome.iterations,
        start_index,
        diagnostics: FitDiagnostics {
            objective_trace: outcome.trace,
            start_traces,
            tikhonov_regularizations: 0,
            zero_norm_blocks,
            function_evaluations: total_evaluations,
            termination: outcome.termination,
        },
    })
}

/// Least-squares fit against the moment tensors in time coordinates:
/// minimizes the stacked block-normalized mismatch between the candidate's
/// population moments and the given (debiased or population) targets.
pub fn fit_t(moments: &MomentSet, cfg: &OptConfig) -> Result<FitResult> {
    require_fit_kind(moments.kind)?;
    let (spec, zero_norm_blocks) = TimeResidual::new(moments);
    let p = 2 * moments.q + 1;
    multi_start_fit(|x| spec.eval(x), p, cfg, zero_norm_blocks)
}

/// Least-squares fit in cosine coordinates: the first-order block is
/// matched in projected coordinates, the higher blocks after the transfer
/// through the inverse cosine matrix.
pub fn fit_m(moments: &MomentSet, cm: &CosineMatrix, cfg: &OptConfig) -> Result<FitResult> {
    require_fit_kind(moments.kind)?;
    if cm.q() != moments.q {
        return Err(Error::DimensionMismatch {
            expected: moments.q,
            got: cm.q(),
        });
    }
    let cosine = to_cosine(moments, cm)?;
    let (spec, zero_norm_blocks) = CosineResidual::new(&cosine);
    let p = 2 * moments.q + 1;
    multi_start_fit(|x| spec.eval(x), p, cfg, zero_norm_blocks)
}

/// Posterior shift responsibilities for every observation, as a row-major
/// `n x p` matrix. Computed in log space with per-row max subtraction so
/// small noise levels cannot underflow the softmax.
#[cfg(test)]
pub(crate) fn responsibilities(batch: &ObservationBatch, values: &[f64], sigma: f64) -> Vec<f64> {
    let p = batch.p();
    let q = batch.q();
    let rows = projected_orbit_samples(values);
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let mut out = Vec::with_capacity(batch.n() * p);
    let mut scores = vec![0.0; p];
    for y in batch.samples() {
        for (l, score) in scores.iter_mut().enumerate() {
            let row = &rows[l * q..(l + 1) * q];
            let distance_sq: f64 = row.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            *score = -distance_sq * inv_two_sigma_sq;
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for score in scores.iter_mut() {
            *score = (*score - max).exp();
            total += *score;
        }
        for score in &scores {
            out.push(score / total);
        }
    }
    out
}

/// Normal matrix of the weighted M-step least-squares problem: each shift
/// contributes its projection pattern (two ones per retained coordinate)
/// weighted by the total responsibility it collected.
pub(crate) fn em_normal_matrix(shift_weights: &[f64], q: usize) -> DMatrix<f64> {
    let p = shift_weights.len();
    let mut h = DMatrix::zeros(p, p);
    for (l, &w) in shift_weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for j in 1..=q {
            let a = (j + p - l) % p;
            let b = (2 * p - j - l) % p;
            h[(a, a)] += w;
            h[(b, b)] += w;
            h[(a, b)] += w;
            h[(b, a)] += w;
        }
    }
    h
}

fn m_step(
    shift_weights: &[f64],
    weighted_sums: &[f64],
    q: usize,
    tikhonov: &mut usize,
) -> Result<Vec<f64>> {
    let p = shift_weights.len();
    let mut h = em_normal_matrix(shift_weights, q);
    let mut rhs = DVector::zeros(p);
    for (l, &w) in shift_weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let z = &weighted_sums[l * q..(l + 1) * q];
        for j in 1..=q {
            let a = (j + p - l) % p;
            let b = (2 * p - j - l) % p;
            rhs[a] += z[j - 1];
            rhs[b] += z[j - 1];
        }
    }
    if let Some(factor) = Cholesky::new(h.clone()) {
        return Ok(factor.solve(&rhs).as_slice().to_vec());
    }
    // Responsibilities concentrated on few shifts leave the normal matrix
    // rank-deficient; a small ridge keeps the update well defined.
    *tikhonov += 1;
    let ridge = 1e-10 * h.trace();
    for i in 0..p {
        h[(i, i)] += ridge;
    }
    match Cholesky::new(h) {
        Some(factor) => Ok(factor.solve(&rhs).as_slice().to_vec()),
        None => Err(Error::SingularMatrix { residual: ridge }),
    }
}

/// Marginal log-likelihood of the batch under the uniform-shift mixture
/// with mean rows `P(shift_l v)` and isotropic noise `sigma`.
pub fn marginal_log_likelihood(batch: &ObservationBatch, values: &[f64], sigma: f64) -> f64 {
    let p = batch.p();
    let q = batch.q();
    let rows = projected_orbit_samples(values);
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let constant = -(q as f64 / 2.0) * (TAU * 0.5 * sigma * sigma * 2.0).ln() - (p as f64).ln();
    let mut scores = vec![0.0; p];
    let mut total = KahanSum::new();
    for y in batch.samples() {
        for (l, score) in scores.iter_mut().enumerate() {
            let row = &rows[l * q..(l + 1) * q];
            let distance_sq: f64 = row.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            *score = -distance_sq * inv_two_sigma_sq;
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln() + max;
        total.add(log_sum + constant);
    }
    total.value()
}

struct EmRun {
    x: Vec<f64>,
    final_log_likelihood: f64,
    iterations: usize,
    trace: Vec<f64>,
    termination: Termination,
}

fn em_single(
    batch: &ObservationBatch,
    sigma: f64,
    cfg: &EmConfig,
    mut x: Vec<f64>,
    tikhonov: &mut usize,
) -> Result<EmRun> {
    let p = batch.p();
    let q = batch.q();
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let constant = -(q as f64 / 2.0) * (TAU * 0.5 * sigma * sigma * 2.0).ln() - (p as f64).ln();

    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut termination = Termination::IterationLimit;
    let mut scores = vec![0.0; p];
    let mut shift_weights = vec![0.0; p];
    let mut weighted_sums = vec![0.0; p * q];

    for _ in 0..cfg.max_iters {
        // E-step: responsibilities accumulated into per-shift totals; the
        // same pass yields the marginal log-likelihood of the current
        // iterate for free.
        let rows = projected_orbit_samples(&x);
        shift_weights.fill(0.0);
        weighted_sums.fill(0.0);
        let mut log_likelihood = KahanSum::new();
        for y in batch.samples() {
            for (l, score) in scores.iter_mut().enumerate() {
                let row = &rows[l * q..(l + 1) * q];
                let distance_sq: f64 = row.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                *score = -distance_sq * inv_two_sigma_sq;
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for score in scores.iter_mut() {
                *score = (*score - max).exp();
                total += *score;
            }
            log_likelihood.add(total.ln() + max + constant);
            let inv_total = 1.0 / total;
            for l in 0..p {
                let w = scores[l] * inv_total;
                shift_weights[l] += w;
                let dst = &mut weighted_sums[l * q..(l + 1) * q];
                for (d, value) in dst.iter_mut().zip(y.iter()) {
                    *d += w * value;
                }
            }
        }
        trace.push(log_likelihood.value());

        let next = m_step(&shift_weights, &weighted_sums, q, tikhonov)?;
        iterations += 1;
        let change: f64 = next
            .iter()
            .zip(x.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        x = next;
        if change / scale < cfg.rel_tol {
            termination = Termination::IterateChange;
            break;
        }
    }

    // Likelihood of the final iterate closes the trace; the EM guarantee
    // makes the whole sequence nondecreasing.
    let final_log_likelihood = marginal_log_likelihood(batch, &x, sigma);
    trace.push(final_log_likelihood);

    Ok(EmRun {
        x,
        final_log_likelihood,
        iterations,
        trace,
        termination,
    })
}

/// Expectation-maximization for the uniform-shift mixture. Soft shift
/// responsibilities (E-step) alternate with a weighted linear
/// least-squares update of the signal (M-step); the best of `cfg.starts`
/// runs by final marginal log-likelihood wins.
pub fn em_fit(batch: &ObservationBatch, sigma: f64, cfg: &EmConfig) -> Result<FitResult> {
    cfg.validate()?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "noise level sigma must be positive and finite, got {sigma}"
        )));
    }
    let p = batch.p();
    let mut tikhonov = 0usize;
    let mut start_traces = Vec::with_capacity(cfg.starts);
    let mut best: Option<(usize, EmRun)> = None;
    for start in 0..cfg.starts {
        let mut stream = rng::stream(rng::derive_seed(cfg.seed, &[start as u64]));
        let x0 = rng::unit_norm_gaussian(&mut stream, p);
        let run = em_single(batch, sigma, cfg, x0, &mut tikhonov)?;
        start_traces.push(run.trace.clone());
        let improves = match &best {
            None => true,
            Some((_, current)) => run.final_log_likelihood > current.final_log_likelihood,
        };
        if improves {
            best = Some((start, run));
        }
    }
    let (start_index, run) = best.expect("at least one start");
    Ok(FitResult {
        estimate: Signal::new(run.x)?,
        objective: run.final_log_likelihood,
        iterations: run.iterations,
        start_index,
        diagnostics: FitDiagnostics {
            objective_trace: run.trace,
            start_traces,
            tikhonov_regularizations: tikhonov,
            zero_norm_blocks: 0,
            function_evaluations: 0,
            termination: run.termination,
        },
    })
}
