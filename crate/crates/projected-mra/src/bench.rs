//! Deterministic Monte Carlo harness comparing the estimators across noise
//! levels: seeded target and batch generation, per-trial scoring against
//! the true orbit, moment-conditioning diagnostics, CSV emission, summary
//! tables, and log-log scaling-slope fits.
//!
//! Every trial derives its own seeds from the master seed and the (noise
//! level, trial) indices, so runs are reproducible record for record
//! regardless of how the trial jobs are scheduled; `runtime_seconds` is
//! the one wall-clock measurement and the only column that varies between
//! identical runs.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{em_fit, fit_m, fit_t, EmConfig, OptConfig};
use crate::model::generate;
use crate::moments::{
    debias, empirical_moments, frobenius, population_cosine_moments, population_moments,
    to_cosine, CosineMatrix,
};
use crate::recovery::{reconstruct, reconstruct_with, RecoveryOptions};
use crate::rng;
use crate::signal::{orbit_distance, Signal, SpectralForm};

/// Estimation methods the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Expectation-maximization on the raw batch.
    Em,
    /// Least-squares fit against debiased moments in time coordinates.
    FitT,
    /// Least-squares fit against debiased moments in cosine coordinates.
    FitM,
    /// Closed-form orbit recovery applied to debiased moments.
    Algorithm1,
}

impl Method {
    /// Name used in CSV files and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            Method::Em => "em",
            Method::FitT => "fit_T",
            Method::FitM => "fit_M",
            Method::Algorithm1 => "algorithm1",
        }
    }

    /// Inverse of [`Method::label`].
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "em" => Ok(Method::Em),
            "fit_T" => Ok(Method::FitT),
            "fit_M" => Ok(Method::FitM),
            "algorithm1" => Ok(Method::Algorithm1),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}; expected em, fit_T, fit_M, or algorithm1"
            ))),
        }
    }

    // Seed-schedule role, offset past the target and batch roles.
    fn seed_role(self) -> u64 {
        match self {
            Method::Em => 2,
            Method::FitT => 3,
            Method::FitM => 4,
            Method::Algorithm1 => 5,
        }
    }
}

/// Full description of one noise-sweep experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Signal length, odd and at least 7.
    pub p: usize,
    /// Observations per trial batch.
    pub n: usize,
    /// Noise levels, strictly positive and increasing.
    pub sigma_grid: Vec<f64>,
    /// Monte Carlo repetitions per noise level.
    pub trials: usize,
    /// Methods to run on every trial, without duplicates.
    pub methods: Vec<Method>,
    /// Master seed; every trial derives its own seeds from it.
    pub seed: u64,
    /// Destination of the record CSV.
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    /// Checks the structural invariants listed on the fields.
    pub fn validate(&self) -> Result<()> {
        if self.p < 7 || self.p % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "signal length must be odd and at least 7, got {}",
                self.p
            )));
        }
        if self.n == 0 || self.trials == 0 {
            return Err(Error::InvalidConfig(
                "n and trials must be at least 1".into(),
            ));
        }
        if self.sigma_grid.is_empty() {
            return Err(Error::InvalidConfig("sigma grid is empty".into()));
        }
        for pair in self.sigma_grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidConfig(format!(
                    "sigma grid must be strictly increasing, got {:?} before {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        let first = self.sigma_grid[0];
        if !(first > 0.0) || self.sigma_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "sigma grid entries must be positive and finite".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate method {}",
                    m.label()
                )));
            }
        }
        Ok(())
    }
}

/// One method's result on one trial, plus the trial's moment diagnostics.
/// The `d_err` fields describe the trial's debiased moments and repeat
/// identically on every record of that trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Noise level of the trial.
    pub sigma: f64,
    /// Trial number within the noise level.
    pub trial_index: usize,
    /// Method that produced this record.
    pub method: Method,
    /// Dihedral-orbit distance between the estimate and the truth; NaN if
    /// the method failed on this trial.
    pub orbit_error: f64,
    /// Wall-clock method runtime.
    pub runtime_seconds: f64,
    /// Iterations the method reported (0 for the closed-form recovery).
    pub iterations: usize,
    /// Method objective: final log-likelihood for EM, final sum of squared
    /// residuals for the fits, winning anchor-candidate mismatch for the
    /// closed-form recovery.
    pub objective: f64,
    /// Relative Frobenius error of the debiased third moment in time
    /// coordinates.
    pub d_err_t3: f64,
    /// The same error after the transfer to cosine coordinates.
    pub d_err_m3: f64,
}

/// Column header of the record CSV.
pub const RECORD_HEADER: &str =
    "sigma,trial_index,method,orbit_error,runtime_seconds,iterations,objective,d_err_T3,d_err_M3";

/// Column header of the summary CSV.
pub const SUMMARY_HEADER: &str =
    "sigma,method,records,median_error,mse,median_runtime_seconds,median_d_err_T3,median_d_err_M3";

/// Seed for a trial's target-signal stream.
pub fn target_seed(master: u64, sigma_index: usize, trial_index: usize) -> u64 {
    rng::derive_seed(master, &[sigma_index as u64, trial_index as u64, 0])
}

/// Seed for a trial's observation batch.
pub fn batch_seed(master: u64, sigma_index: usize, trial_index: usize) -> u64 {
    rng::derive_seed(master, &[sigma_index as u64, trial_index as u64, 1])
}

/// Seed for a method's internal randomness on a trial.
pub fn method_seed(master: u64, sigma_index: usize, trial_index: usize, method: Method) -> u64 {
    rng::derive_seed(
        master,
        &[sigma_index as u64, trial_index as u64, method.seed_role()],
    )
}

/// Recovery settings for noisy moment input: the magnitude floor scales
/// with the largest recovered magnitude, since normalized cosines computed
/// from tiny noisy magnitudes are meaningless.
pub fn noisy_recovery_options() -> RecoveryOptions {
    RecoveryOptions {
        r_min_relative: 1e-3,
        ..RecoveryOptions::default()
    }
}

/// Draws the unknown-signal stand-in for one trial: i.i.d. standard
/// Gaussian entries normalized to unit Euclidean norm, rejection-resampled
/// until every Fourier coefficient magnitude exceeds 0.02 and the
/// closed-form recovery runs on the population moments without raising any
/// degeneracy flag.
pub fn generate_target(p: usize, seed: u64) -> Result<Signal> {
    let mut stream = rng::stream(seed);
    for _ in 0..1000 {
        let candidate = Signal::new(rng::unit_norm_gaussian(&mut stream, p))?;
        let form = SpectralForm::from_signal(&candidate);
        let min_coefficient = form
            .magnitudes
            .iter()
            .fold(form.mean.abs(), |acc, m| acc.min(*m));
        if min_coefficient <= 0.02 {
            continue;
        }
        match reconstruct(&population_moments(&candidate)) {
            Ok((_, trace)) if trace.degenerate_flags.iter().all(|f| !f) => return Ok(candidate),
            _ => continue,
        }
    }
    // Each draw passes with high probability; a thousand rejections means
    // the sampler or the flags are broken.
    unreachable!("rejection sampling failed to produce a generic signal");
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn run_trial(
    cfg: &ExperimentConfig,
    cm: &CosineMatrix,
    sigma_index: usize,
    trial_index: usize,
) -> Result<Vec<TrialRecord>> {
    let sigma = cfg.sigma_grid[sigma_index];
    let target = generate_target(cfg.p, target_seed(cfg.seed, sigma_index, trial_index))?;
    let batch = generate(
        &target,
        cfg.n,
        sigma,
        batch_seed(cfg.seed, sigma_index, trial_index),
    )?;
    let debiased = debias(&empirical_moments(&batch), sigma)?;
    let debiased_cosine = to_cosine(&debiased, cm)?;
    let population = population_moments(&target);
    let population_cosine = population_cosine_moments(&target);
    let d_err_t3 =
        frobenius(&difference(&debiased.t3, &population.t3)) / frobenius(&population.t3);
    let d_err_m3 = frobenius(&difference(&debiased_cosine.m3, &population_cosine.m3))
        / frobenius(&population_cosine.m3);

    let mut records = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let seed = method_seed(cfg.seed, sigma_index, trial_index, method);
        let started = Instant::now();
        let outcome: Result<(Signal, usize, f64)> = match method {
            Method::Em => {
                let em_cfg = EmConfig {
                    seed,
                    ..EmConfig::default()
                };
                em_fit(&batch, sigma, &em_cfg).map(|r| (r.estimate, r.iterations, r.objective))
            }
            Method::FitT => {
                let opt_cfg = OptConfig {
                    seed,
                    ..OptConfig::default()
                };
                fit_t(&debiased, &opt_cfg).map(|r| (r.estimate, r.iterations, r.objective))
            }
            Method::FitM => {
                let opt_cfg = OptConfig {
                    seed,
                    ..OptConfig::default()
                };
                fit_m(&debiased, cm, &opt_cfg).map(|r| (r.estimate, r.iterations, r.objective))
            }
            Method::Algorithm1 => {
                reconstruct_with(&debiased, &noisy_recovery_options()).map(|(s, trace)| {
                    let objective = trace
                        .chosen_anchor
                        .map(|i| trace.candidate_residuals[i])
                        .unwrap_or(f64::NAN);
                    (s, 0, objective)
                })
            }
        };
        let runtime_seconds = started.elapsed().as_secs_f64();
        // A method that cannot handle the trial (the closed-form recovery
        // on badly degraded moments, typically) yields a NaN error rather
        // than aborting the sweep; summaries and slope fits skip NaN.
        let (orbit_error, iterations, objective) = match outcome {
            Ok((estimate, iterations, objective)) => {
                (orbit_distance(&estimate, &target)?, iterations, objective)
            }
            Err(_) => (f64::NAN, 0, f64::NAN),
        };
        records.push(TrialRecord {
            sigma,
            trial_index,
            method,
            orbit_error,
            runtime_seconds,
            iterations,
            objective,
            d_err_t3,
            d_err_m3,
        });
    }
    Ok(records)
}

/// Runs the full sweep and writes the record CSV to the configured path.
/// The output file is created before any computation so an unwritable
/// destination fails fast. Trials execute on the rayon worker pool; the
/// derived-seed schedule makes every record independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let file = File::create(&cfg.output_path)?;
    let cm = CosineMatrix::new(cfg.p)?;

    let mut jobs = Vec::with_capacity(cfg.sigma_grid.len() * cfg.trials);
    for sigma_index in 0..cfg.sigma_grid.len() {
        for trial_index in 0..cfg.trials {
            jobs.push((sigma_index, trial_index));
        }
    }
    let outcomes: Vec<Result<Vec<TrialRecord>>> = jobs
        .par_iter()
        .map(|&(sigma_index, trial_index)| run_trial(cfg, &cm, sigma_index, trial_index))
        .collect();
    let mut records = Vec::with_capacity(jobs.len() * cfg.methods.len());
    for outcome in outcomes {
        records.extend(outcome?);
    }
    sort_records(&mut records);

    let mut writer = BufWriter::new(file);
    writer.write_all(records_to_csv(&records).as_bytes())?;
    writer.flush()?;
    Ok(records)
}

fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.trial_index.cmp(&b.trial_index))
            .then(a.method.label().cmp(b.method.label()))
    });
}

fn format_field(value: f64) -> String {
    format!("{value:.16e}")
}

/// Renders records as CSV with a header row; floats carry 17 significant
/// digits so parsing them back is exact.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            format_field(r.sigma),
            r.trial_index,
            r.method.label(),
            format_field(r.orbit_error),
            format_field(r.runtime_seconds),
            r.iterations,
            format_field(r.objective),
            format_field(r.d_err_t3),
            format_field(r.d_err_m3),
        ));
    }
    out
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field.parse().map_err(|_| Error::CsvParse {
        line,
        message: format!("cannot parse {name} from {field:?}"),
    })
}

/// Parses CSV text produced by [`records_to_csv`].
pub fn parse_records(text: &str) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let number = index + 1;
        if number == 1 {
            if line != RECORD_HEADER {
                return Err(Error::CsvParse {
                    line: 1,
                    message: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::CsvParse {
                line: number,
                message: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        records.push(TrialRecord {
            sigma: parse_field(fields[0], number, "sigma")?,
            trial_index: parse_field(fields[1], number, "trial_index")?,
            method: Method::parse(fields[2]).map_err(|e| Error::CsvParse {
                line: number,
                message: e.to_string(),
            })?,
            orbit_error: parse_field(fields[3], number, "orbit_error")?,
            runtime_seconds: parse_field(fields[4], number, "runtime_seconds")?,
            iterations: parse_field(fields[5], number, "iterations")?,
            objective: parse_field(fields[6], number, "objective")?,
            d_err_t3: parse_field(fields[7], number, "d_err_T3")?,
            d_err_m3: parse_field(fields[8], number, "d_err_M3")?,
        });
    }
    Ok(records)
}

/// Reads a record CSV from disk.
pub fn read_records_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    parse_records(&std::fs::read_to_string(path)?)
}

/// Aggregates for one (noise level, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// Noise level.
    pub sigma: f64,
    /// Method.
    pub method: Method,
    /// Records aggregated into this row.
    pub records: usize,
    /// Median orbit error over finite values.
    pub median_error: f64,
    /// Mean squared orbit error over finite values.
    pub mse: f64,
    /// Median wall-clock runtime.
    pub median_runtime_seconds: f64,
    /// Median relative third-moment error in time coordinates.
    pub median_d_err_t3: f64,
    /// Median relative third-moment error in cosine coordinates.
    pub median_d_err_m3: f64,
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.retain(|v| v.is_finite());
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean_square_of(values: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for v in values {
        if v.is_finite() {
            total += v * v;
            count += 1;
        }
    }
    if count == 0 {
        f64::NAN
    } else {
        total / count as f64
    }
}

/// Collapses records into per-(noise level, method) aggregates, ordered by
/// noise level and then method name.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.method.label().cmp(b.method.label()))
    });
    let mut rows = Vec::new();
    let mut group: Vec<&TrialRecord> = Vec::new();
    for record in sorted {
        let same_cell = group.last().is_some_and(|g| {
            g.sigma.to_bits() == record.sigma.to_bits() && g.method == record.method
        });
        if !same_cell && !group.is_empty() {
            rows.push(summarize_cell(&group));
            group.clear();
        }
        group.push(record);
    }
    if !group.is_empty() {
        rows.push(summarize_cell(&group));
    }
    rows
}

fn summarize_cell(group: &[&TrialRecord]) -> SummaryRow {
    let errors: Vec<f64> = group.iter().map(|r| r.orbit_error).collect();
    SummaryRow {
        sigma: group[0].sigma,
        method: group[0].method,
        records: group.len(),
        median_error: median_of(errors.clone()),
        mse: mean_square_of(&errors),
        median_runtime_seconds: median_of(group.iter().map(|r| r.runtime_seconds).collect()),
        median_d_err_t3: median_of(group.iter().map(|r| r.d_err_t3).collect()),
        median_d_err_m3: median_of(group.iter().map(|r| r.d_err_m3).collect()),
    }
}

/// Renders a summary table as CSV.
pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            format_field(r.sigma),
            r.method.label(),
            r.records,
            format_field(r.median_error),
            format_field(r.mse),
            format_field(r.median_runtime_seconds),
            format_field(r.median_d_err_t3),
            format_field(r.median_d_err_m3),
        ));
    }
    out
}

/// Ordinary least-squares slope of log mean-squared orbit error against
/// log noise level, over one method's records with noise level in
/// `[sigma_lo, sigma_hi]`. Needs at least three noise levels with a finite
/// mean-squared error in range.
pub fn fit_scaling_slope(
    records: &[TrialRecord],
    method: Method,
    sigma_lo: f64,
    sigma_hi: f64,
) -> Result<f64> {
    let selected: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.method == method && r.sigma >= sigma_lo && r.sigma <= sigma_hi)
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut by_level: Vec<(f64, Vec<f64>)> = Vec::new();
    for record in &selected {
        match by_level
            .iter_mut()
            .find(|(s, _)| s.to_bits() == record.sigma.to_bits())
        {
            Some((_, errors)) => errors.push(record.orbit_error),
            None => by_level.push((record.sigma, vec![record.orbit_error])),
        }
    }
    let mut points = Vec::with_capacity(by_level.len());
    for (sigma, errors) in &by_level {
        let mse = mean_square_of(errors);
        if mse.is_finite() && mse > 0.0 {
            points.push((sigma.ln(), mse.ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::TooFewSigmaLevels {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (x, y) in &points {
        numerator += (x - mean_x) * (y - mean_y);
        denominator += (x - mean_x) * (x - mean_x);
    }
    Ok(numerator / denominator)
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 1 && lo > 0.0 && hi >= lo);
    if count == 1 {
        return vec![lo];
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (log_lo + (log_hi - log_lo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Quick configuration: 10 noise levels, 20 trials each, minutes of work.
pub fn desk_preset(seed: u64, output_path: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        p: 13,
        n: 20_000,
        sigma_grid: log_spaced(0.05, 1.0, 10),
        trials: 20,
        methods: vec![Method::Em, Method::FitT, Method::FitM],
        seed,
        output_path,
    }
}

/// Full configuration: 20 noise levels, 100 trials each, hours of work.
pub fn paper_preset(seed: u64, output_path: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        p: 13,
        n: 20_000,
        sigma_grid: log_spaced(0.05, 1.0, 20),
        trials: 100,
        methods: vec![Method::Em, Method::FitT, Method::FitM],
        seed,
        output_path,
    }
}
