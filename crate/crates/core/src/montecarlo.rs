//! Monte Carlo harness for empirical size, power and long-run variance
//! quality.
//!
//! Replication `i` draws its sample with seed `base_seed + i`; calibration
//! runs for size correction use the disjoint range starting at
//! `base_seed + CALIBRATION_SEED_OFFSET`. Results are collected in index
//! order, so reports do not depend on the number of worker threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{
    self, make_alternative_with_ref, AltId, MeanFn, NoiseSpec, ScenarioSpec, VarianceFn,
    DEFAULT_N_REF,
};
use crate::error::{Error, Result};
use crate::lrv::{batch_means_lrv, estimate_kappa};
use crate::series::{difference, TimeSeries};
use crate::variance_test::{run_test_with, AsymptoticConstants, TestConfig, TestResult};

pub const CALIBRATION_SEED_OFFSET: u64 = 1 << 40;
pub const PILOT_LEN: usize = 10_000_000;
pub const PILOT_BATCH_LEN: usize = 10_000;
pub const PILOT_SEED: u64 = 0x5eed_0f70_11a7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Size,
    PowerNominal,
    PowerSizeCorrected,
    LrvQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub noise: NoiseSpec,
    #[serde(default)]
    pub mean: MeanFn,
    #[serde(default)]
    pub alternative: Option<AltId>,
    pub n: usize,
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    pub mode: Mode,
    #[serde(default)]
    pub base_seed: u64,
    /// Analyse first differences of each sample.
    #[serde(default)]
    pub difference: bool,
    #[serde(default = "default_n_ref")]
    pub n_ref: f64,
}

fn default_alpha() -> f64 {
    crate::variance_test::DEFAULT_ALPHA
}
fn default_s() -> f64 {
    crate::variance_test::DEFAULT_S
}
fn default_q() -> f64 {
    crate::variance_test::DEFAULT_Q
}
fn default_n_ref() -> f64 {
    DEFAULT_N_REF
}

impl ExperimentSpec {
    pub fn new(noise: NoiseSpec, n: usize, replications: usize, mode: Mode) -> Self {
        Self {
            noise,
            mean: MeanFn::Zero,
            alternative: None,
            n,
            replications,
            alpha: default_alpha(),
            s: default_s(),
            q: default_q(),
            mode,
            base_seed: 0,
            difference: false,
            n_ref: DEFAULT_N_REF,
        }
    }

    pub fn with_alternative(mut self, id: AltId) -> Self {
        self.alternative = Some(id);
        self
    }

    pub fn with_mean(mut self, mean: MeanFn) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn differenced(mut self) -> Self {
        self.difference = true;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn test_config(&self) -> TestConfig {
        TestConfig {
            s: self.s,
            q: self.q,
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.mean.validate()?;
        self.test_config().validate()?;
        if self.replications < 100 {
            return Err(Error::InvalidParameter(format!(
                "at least 100 replications required, got {}",
                self.replications
            )));
        }
        match (self.mode, self.alternative) {
            (Mode::Size | Mode::LrvQuality, Some(id)) => Err(Error::InvalidParameter(format!(
                "{:?} runs under constant variance, alternative {id} given",
                self.mode
            ))),
            (Mode::PowerNominal | Mode::PowerSizeCorrected, None) => Err(
                Error::InvalidParameter("power runs need an alternative id".into()),
            ),
            _ => Ok(()),
        }
    }

    fn variance(&self) -> Result<VarianceFn> {
        match self.alternative {
            Some(id) => make_alternative_with_ref(id, self.n, self.n_ref),
            None => VarianceFn::constant(1.0),
        }
    }

    fn sample(&self, variance: &VarianceFn, seed: u64) -> Result<TimeSeries> {
        let x = dgp::generate_sample(&ScenarioSpec {
            noise: self.noise.clone(),
            mean: self.mean.clone(),
            variance: variance.clone(),
            n: self.n,
            seed,
        })?;
        if self.difference {
            difference(&x)
        } else {
            Ok(x)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub dgp: String,
    pub noise: NoiseSpec,
    pub mean: MeanFn,
    pub alternative: Option<AltId>,
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    pub s: f64,
    pub q: f64,
    pub differenced: bool,
    pub base_seed: u64,
    pub rejection_rate: f64,
    pub mc_stderr: f64,
    pub ci_half_width: f64,
    /// Empirical `(1−α)`-quantile of `T` under the paired null run.
    pub critical_value: Option<f64>,
    /// Rejection rate of the same alternative replications at the asymptotic critical value.
    pub nominal_rejection_rate: Option<f64>,
    /// Rejection rate of the calibration replications at the asymptotic critical value.
    pub null_rejection_rate: Option<f64>,
    pub reference_kappa: Option<f64>,
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    fn base(spec: &ExperimentSpec, rate: f64) -> Self {
        let m = spec.replications as f64;
        let mc_stderr = (rate * (1.0 - rate) / m).sqrt();
        Self {
            mode: spec.mode,
            dgp: dgp_label(&spec.noise).to_string(),
            noise: spec.noise.clone(),
            mean: spec.mean.clone(),
            alternative: spec.alternative,
            n: spec.n,
            replications: spec.replications,
            alpha: spec.alpha,
            s: spec.s,
            q: spec.q,
            differenced: spec.difference,
            base_seed: spec.base_seed,
            rejection_rate: rate,
            mc_stderr,
            ci_half_width: 1.96 * mc_stderr,
            critical_value: None,
            nominal_rejection_rate: None,
            null_rejection_rate: None,
            reference_kappa: None,
            bias: None,
            rmse: None,
            wall_time_secs: 0.0,
        }
    }
}

pub fn dgp_label(noise: &NoiseSpec) -> String {
    match noise {
        NoiseSpec::IidNormal => "N(0,1)".into(),
        NoiseSpec::IidExponentialCentered => "Exp(1)-1".into(),
        NoiseSpec::ExponentialRaw => "Exp(1)".into(),
        NoiseSpec::Ar1 { phi } => format!("AR(1), {phi}"),
        NoiseSpec::Arma22 { .. } => "ARMA(2,2)".into(),
        NoiseSpec::Garch11 { .. } => "GARCH(1,1)".into(),
    }
}

/// The six processes of the simulation study, in table order.
pub fn study_dgps() -> Vec<NoiseSpec> {
    vec![
        NoiseSpec::IidNormal,
        NoiseSpec::ExponentialRaw,
        NoiseSpec::ar1(0.4),
        NoiseSpec::ar1(0.7),
        NoiseSpec::study_arma22(),
        NoiseSpec::study_garch11(),
    ]
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn replicate<T: Send>(
    m: usize,
    seed0: u64,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..m)
        .into_par_iter()
        .map(|i| f(seed0.wrapping_add(i as u64)))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replication {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

fn tests_for(spec: &ExperimentSpec, variance: &VarianceFn, seed0: u64) -> Result<Vec<TestResult>> {
    let config = spec.test_config();
    replicate(spec.replications, seed0, |seed| {
        run_test_with(&spec.sample(variance, seed)?, &config)
    })
}

fn rate(hits: impl Iterator<Item = bool>, m: usize) -> f64 {
    hits.filter(|&h| h).count() as f64 / m as f64
}

/// Standardized statistics `T/ψ` of the replications of `spec` (its
/// alternative, if any), in replication order.
pub fn z_statistics(spec: &ExperimentSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let variance = spec.variance()?;
    Ok(tests_for(spec, &variance, spec.base_seed)?
        .iter()
        .map(TestResult::z_stat)
        .collect())
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    match spec.mode {
        Mode::Size => run_size(spec),
        Mode::PowerNominal | Mode::PowerSizeCorrected => run_power(spec),
        Mode::LrvQuality => run_lrv_quality(spec),
    }
}

pub fn run_size(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.mode != Mode::Size {
        return Err(Error::InvalidParameter(format!("run_size called with mode {:?}", spec.mode)));
    }
    spec.validate()?;
    let started = Instant::now();
    let variance = spec.variance()?;
    let results = tests_for(spec, &variance, spec.base_seed)?;
    let r = rate(results.iter().map(|t| t.reject), spec.replications);
    let mut report = ExperimentReport::base(spec, r);
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Type-7 (linear interpolation) sample quantile of ascending `sorted`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn run_power(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if !matches!(spec.mode, Mode::PowerNominal | Mode::PowerSizeCorrected) {
        return Err(Error::InvalidParameter(format!("run_power called with mode {:?}", spec.mode)));
    }
    spec.validate()?;
    let started = Instant::now();
    let variance = spec.variance()?;
    let results = tests_for(spec, &variance, spec.base_seed)?;
    let m = spec.replications;
    let nominal = rate(results.iter().map(|t| t.reject), m);

    let mut report = if spec.mode == Mode::PowerNominal {
        ExperimentReport::base(spec, nominal)
    } else {
        let null = VarianceFn::constant(1.0)?;
        let calibration = tests_for(
            spec,
            &null,
            spec.base_seed.wrapping_add(CALIBRATION_SEED_OFFSET),
        )?;
        let mut null_t: Vec<f64> = calibration.iter().map(|t| t.t_stat).collect();
        null_t.sort_unstable_by(f64::total_cmp);
        let critical = empirical_quantile(&null_t, 1.0 - spec.alpha);
        let corrected = rate(results.iter().map(|t| t.t_stat > critical), m);
        let mut report = ExperimentReport::base(spec, corrected);
        report.critical_value = Some(critical);
        report.nominal_rejection_rate = Some(nominal);
        report.null_rejection_rate = Some(rate(calibration.iter().map(|t| t.reject), m));
        report
    };
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Bias and RMSE of `κ̂/κ` where `κ` is the long-run standard deviation of
/// the squared standardized noise (or its first differences).
pub fn run_lrv_quality(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.mode != Mode::LrvQuality {
        return Err(Error::InvalidParameter(format!(
            "run_lrv_quality called with mode {:?}",
            spec.mode
        )));
    }
    spec.validate()?;
    let started = Instant::now();
    let kappa = reference_kappa(&spec.noise, spec.difference)?;
    let variance = VarianceFn::constant(1.0)?;
    let ratios = replicate(spec.replications, spec.base_seed, |seed| {
        let x = spec.sample(&variance, seed)?;
        Ok(estimate_kappa(&x, spec.s, spec.q)?.kappa_hat / kappa)
    })?;
    let m = ratios.len() as f64;
    let bias = ratios.iter().map(|r| r - 1.0).sum::<f64>() / m;
    let rmse = (ratios.iter().map(|r| (r - 1.0).powi(2)).sum::<f64>() / m).sqrt();
    let mut report = ExperimentReport::base(spec, 0.0);
    report.reference_kappa = Some(kappa);
    report.bias = Some(bias);
    report.rmse = Some(rmse);
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Long-run standard deviation of the squared standardized noise: closed
/// form when available, otherwise a cached batch-means pilot estimate.
pub fn reference_kappa(noise: &NoiseSpec, differenced: bool) -> Result<f64> {
    if let Some(k) = noise.squared_long_run_sd(differenced) {
        return Ok(k);
    }
    static CACHE: OnceLock<Mutex<HashMap<String, f64>>> = OnceLock::new();
    let key = format!("{}|{differenced}", serde_json::to_string(noise)?);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&k) = cache.lock().expect("kappa cache poisoned").get(&key) {
        return Ok(k);
    }
    let k = pilot_kappa(noise, differenced, PILOT_LEN, PILOT_BATCH_LEN, PILOT_SEED)?;
    cache.lock().expect("kappa cache poisoned").insert(key, k);
    Ok(k)
}

/// Batch-means estimate of the long-run standard deviation of `(Y/sd(Y))²`
/// (or of the squared standardized first differences).
pub fn pilot_kappa(
    noise: &NoiseSpec,
    differenced: bool,
    len: usize,
    batch_len: usize,
    seed: u64,
) -> Result<f64> {
    let y = dgp::generate_noise(noise, len + usize::from(differenced), seed)?;
    let y = if differenced { difference(&y)? } else { y };
    let v = y.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sq: Vec<f64> = v.iter().map(|x| (x - mean).powi(2) / var).collect();
    Ok(batch_means_lrv(&sq, batch_len)?.sqrt())
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `sample` and the standard normal.
pub fn ks_distance_normal(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = crate::variance_test::normal_cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Renders reports as a table with one column per process, in the layout
/// of the simulation tables (rows: `n` × hypothesis, or `n` for LRV cells).
pub fn format_table(reports: &[ExperimentReport]) -> String {
    let mut columns: Vec<String> = Vec::new();
    let mut rows: Vec<String> = Vec::new();
    let mut cells: HashMap<(String, String), String> = HashMap::new();
    for r in reports {
        if !columns.contains(&r.dgp) {
            columns.push(r.dgp.clone());
        }
        let hyp = r.alternative.map_or_else(|| "H".to_string(), |a| a.to_string());
        let row = match r.mode {
            Mode::LrvQuality => format!("n={} {}", r.n, mean_label(&r.mean, r.differenced)),
            _ => format!("n={} {hyp}", r.n),
        };
        if !rows.contains(&row) {
            rows.push(row.clone());
        }
        let cell = match r.mode {
            Mode::LrvQuality => format!(
                "{:.4} / {:.4}",
                r.bias.unwrap_or(f64::NAN),
                r.rmse.unwrap_or(f64::NAN)
            ),
            _ => format!("{:.3}", r.rejection_rate),
        };
        cells.insert((row, r.dgp.clone()), cell);
    }
    let mut out = String::new();
    let _ = write!(out, "{:<24}", "");
    for c in &columns {
        let _ = write!(out, " | {c:>16}");
    }
    out.push('\n');
    for row in &rows {
        let _ = write!(out, "{row:<24}");
        for c in &columns {
            let cell = cells.get(&(row.clone(), c.clone())).map_or("", String::as_str);
            let _ = write!(out, " | {cell:>16}");
        }
        out.push('\n');
    }
    out
}

fn mean_label(mean: &MeanFn, differenced: bool) -> String {
    let base = match mean {
        MeanFn::Zero => "mu=0",
        MeanFn::Linear { .. } => "mu=x",
        MeanFn::Sine { .. } => "mu=sin",
        MeanFn::Step { .. } => "mu=step",
        MeanFn::PiecewiseLinear { .. } => "mu=pl",
    };
    if differenced {
        format!("{base} (diff)")
    } else {
        base.to_string()
    }
}

/// `θ` and `ψ` used by the harness, exposed for report consumers.
pub fn constants() -> AsymptoticConstants {
    AsymptoticConstants::new()
}
