//! Data-generating processes `X_i = σ(i/n)·Y_i + μ(i/n)`.
//!
//! Noise processes are standardized to mean zero and unit variance using
//! their exact marginal standard deviation, with the exception of
//! [`NoiseSpec::ExponentialRaw`], which yields plain `Exp(1)` draws.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Burn-in discarded before recording AR, ARMA and GARCH paths.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Reference sample length of the `√(n_ref/n)` effect-size convention.
pub const DEFAULT_N_REF: f64 = 2000.0;

const PSI_WEIGHTS: usize = 4000;

/// Seeded generator used for every simulated path.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stationary noise process `Y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    IidNormal,
    /// `E − 1` with `E ~ Exp(1)`.
    IidExponentialCentered,
    /// Uncentered `Exp(1)` draws (mean 1, variance 1).
    ExponentialRaw,
    Ar1 {
        phi: f64,
    },
    /// `Y_i = a₁Y_{i−1} + a₂Y_{i−2} + ε_i + m₁ε_{i−1} + m₂ε_{i−2}`.
    Arma22 {
        ar: [f64; 2],
        ma: [f64; 2],
    },
    /// `Y_i = h_i ε_i`, `h_i² = ω + a·Y_{i−1}² + β·h_{i−1}²`.
    Garch11 {
        omega: f64,
        alpha: f64,
        beta: f64,
    },
}

impl NoiseSpec {
    pub fn ar1(phi: f64) -> Self {
        NoiseSpec::Ar1 { phi }
    }

    /// ARMA(2,2) used in the simulation study.
    pub fn study_arma22() -> Self {
        NoiseSpec::Arma22 {
            ar: [0.8, -0.4],
            ma: [0.5, 0.34],
        }
    }

    /// GARCH(1,1) with high volatility persistence used in the simulation study.
    pub fn study_garch11() -> Self {
        NoiseSpec::Garch11 {
            omega: 0.1,
            alpha: 0.1,
            beta: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            NoiseSpec::IidNormal | NoiseSpec::IidExponentialCentered | NoiseSpec::ExponentialRaw => {
                Ok(())
            }
            NoiseSpec::Ar1 { phi } => {
                if finite(&[phi]) && phi.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Nonstationary(format!("AR(1) requires |phi| < 1, got {phi}")))
                }
            }
            NoiseSpec::Arma22 { ar, ma } => {
                if !finite(&ar) || !finite(&ma) {
                    return Err(Error::Nonstationary("non-finite ARMA coefficient".into()));
                }
                if ar_roots_outside_unit_circle(ar) {
                    Ok(())
                } else {
                    Err(Error::Nonstationary(format!(
                        "AR polynomial 1 - {}z - {}z^2 has a root inside the unit circle",
                        ar[0], ar[1]
                    )))
                }
            }
            NoiseSpec::Garch11 { omega, alpha, beta } => {
                if finite(&[omega, alpha, beta])
                    && omega > 0.0
                    && alpha >= 0.0
                    && beta >= 0.0
                    && alpha + beta < 1.0
                {
                    Ok(())
                } else {
                    Err(Error::Nonstationary(format!(
                        "GARCH(1,1) requires omega > 0, alpha, beta >= 0, alpha + beta < 1; got ({omega}, {alpha}, {beta})"
                    )))
                }
            }
        }
    }

    /// Marginal standard deviation of the raw (unstandardized) recursion.
    pub fn raw_marginal_sd(&self) -> f64 {
        match *self {
            NoiseSpec::IidNormal | NoiseSpec::IidExponentialCentered | NoiseSpec::ExponentialRaw => {
                1.0
            }
            NoiseSpec::Ar1 { phi } => (1.0 / (1.0 - phi * phi)).sqrt(),
            NoiseSpec::Arma22 { ar, ma } => {
                let psi = psi_weights(ar, ma, PSI_WEIGHTS);
                psi.iter().map(|p| p * p).sum::<f64>().sqrt()
            }
            NoiseSpec::Garch11 { omega, alpha, beta } => (omega / (1.0 - alpha - beta)).sqrt(),
        }
    }

    /// Autocorrelations `ρ(0..=max_lag)` of a Gaussian linear process, `None`
    /// for processes that are not linear in Gaussian innovations.
    pub fn gaussian_autocorrelations(&self, max_lag: usize) -> Option<Vec<f64>> {
        let psi = match *self {
            NoiseSpec::IidNormal => vec![1.0],
            NoiseSpec::Ar1 { phi } => psi_weights([phi, 0.0], [0.0, 0.0], PSI_WEIGHTS),
            NoiseSpec::Arma22 { ar, ma } => psi_weights(ar, ma, PSI_WEIGHTS),
            _ => return None,
        };
        let gamma0: f64 = psi.iter().map(|p| p * p).sum();
        Some(
            (0..=max_lag)
                .map(|k| {
                    if k >= psi.len() {
                        0.0
                    } else {
                        psi.iter().zip(&psi[k..]).map(|(a, b)| a * b).sum::<f64>() / gamma0
                    }
                })
                .collect(),
        )
    }

    /// Long-run standard deviation `κ` of `Y²` for the standardized process,
    /// or of `(Z/sd(Z))²` for its first differences `Z` when `differenced`.
    ///
    /// Exact for Gaussian linear processes (`Cov(Y₀², Y_k²) = 2ρ(k)²`), iid
    /// exponential noise (moment calculation) and undifferenced GARCH(1,1)
    /// (ARMA(1,1) representation of `Y²`). Returns `None` otherwise.
    pub fn squared_long_run_sd(&self, differenced: bool) -> Option<f64> {
        match *self {
            NoiseSpec::IidExponentialCentered | NoiseSpec::ExponentialRaw => {
                // central moments of Exp(1): μ₂ = 1, μ₃ = 2, μ₄ = 9
                if differenced {
                    // W = (Y₁ − Y₀)/√2: Var(W²) = (2μ₄ + 6)/4 − 1 = 5,
                    // Cov(W₁², W₂²) = (μ₄ + 3)/4 − 1 = 2
                    Some((5.0f64 + 2.0 * 2.0).sqrt())
                } else {
                    Some(8.0f64.sqrt())
                }
            }
            NoiseSpec::Garch11 { omega, alpha, beta } => {
                if differenced {
                    return None;
                }
                let persistence = alpha + beta;
                let var_y = omega / (1.0 - persistence);
                let fourth_denom = 1.0 - beta * beta - 2.0 * alpha * beta - 3.0 * alpha * alpha;
                if fourth_denom <= 0.0 {
                    return None;
                }
                let m4 = 3.0 * omega * omega * (1.0 + persistence)
                    / ((1.0 - persistence) * fourth_denom);
                // Y² − h² is a martingale difference with variance 2·E[h⁴]
                let innovation_var = 2.0 * m4 / 3.0;
                let lrv = innovation_var * (1.0 - beta).powi(2) / (1.0 - persistence).powi(2);
                Some(lrv.sqrt() / var_y)
            }
            _ => {
                let max_lag = PSI_WEIGHTS + 2;
                let rho = self.gaussian_autocorrelations(max_lag)?;
                let rho = if differenced {
                    let gamma_z = |k: usize| {
                        let lower = if k == 0 { rho[1] } else { rho[k - 1] };
                        2.0 * rho[k] - lower - rho[k + 1]
                    };
                    let g0 = gamma_z(0);
                    (0..max_lag).map(|k| gamma_z(k) / g0).collect::<Vec<_>>()
                } else {
                    rho
                };
                let tail: f64 = rho[1..].iter().map(|r| r * r).sum();
                Some((2.0 * (1.0 + 2.0 * tail)).sqrt())
            }
        }
    }
}

/// MA(∞) weights `ψ_j` of an ARMA(2,2) recursion.
fn psi_weights(ar: [f64; 2], ma: [f64; 2], len: usize) -> Vec<f64> {
    let mut psi = vec![0.0; len];
    psi[0] = 1.0;
    for j in 1..len {
        let theta = if j <= 2 { ma[j - 1] } else { 0.0 };
        let mut v = theta + ar[0] * psi[j - 1];
        if j >= 2 {
            v += ar[1] * psi[j - 2];
        }
        psi[j] = v;
    }
    psi
}

/// Roots of `1 − a₁z − a₂z²` lie outside the unit circle.
fn ar_roots_outside_unit_circle(ar: [f64; 2]) -> bool {
    let [a1, a2] = ar;
    if a2 == 0.0 {
        return a1.abs() < 1.0;
    }
    // roots of a₂z² + a₁z − 1 = 0
    let disc = a1 * a1 + 4.0 * a2;
    let min_modulus = if disc >= 0.0 {
        let sq = disc.sqrt();
        let r1 = (-a1 + sq) / (2.0 * a2);
        let r2 = (-a1 - sq) / (2.0 * a2);
        r1.abs().min(r2.abs())
    } else {
        // complex pair, |z|² = c/a = −1/a₂
        (-1.0 / a2).sqrt()
    };
    min_modulus > 1.0
}

/// Standardized noise path of length `n`.
pub fn generate_noise(spec: &NoiseSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    generate_noise_with_burn_in(spec, n, seed, DEFAULT_BURN_IN)
}

pub fn generate_noise_with_burn_in(
    spec: &NoiseSpec,
    n: usize,
    seed: u64,
    burn_in: usize,
) -> Result<TimeSeries> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    let mut rng = rng_from_seed(seed);
    let values = match *spec {
        NoiseSpec::IidNormal => (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        NoiseSpec::IidExponentialCentered => {
            (0..n).map(|_| rng.sample::<f64, _>(Exp1) - 1.0).collect()
        }
        NoiseSpec::ExponentialRaw => (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect(),
        NoiseSpec::Ar1 { phi } => {
            arma_path([phi, 0.0], [0.0, 0.0], n, burn_in, spec.raw_marginal_sd(), &mut rng)
        }
        NoiseSpec::Arma22 { ar, ma } => {
            arma_path(ar, ma, n, burn_in, spec.raw_marginal_sd(), &mut rng)
        }
        NoiseSpec::Garch11 { omega, alpha, beta } => {
            let sd = spec.raw_marginal_sd();
            let mut h2 = sd * sd;
            let mut y_prev2 = h2;
            let mut out = Vec::with_capacity(n);
            for i in 0..burn_in + n {
                h2 = omega + alpha * y_prev2 + beta * h2;
                let y = h2.sqrt() * rng.sample::<f64, _>(StandardNormal);
                y_prev2 = y * y;
                if i >= burn_in {
                    out.push(y / sd);
                }
            }
            out
        }
    };
    TimeSeries::new(values)
}

fn arma_path(
    ar: [f64; 2],
    ma: [f64; 2],
    n: usize,
    burn_in: usize,
    sd: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let (mut y1, mut y2, mut e1, mut e2) = (0.0, 0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..burn_in + n {
        let e: f64 = rng.sample(StandardNormal);
        let y = ar[0] * y1 + ar[1] * y2 + e + ma[0] * e1 + ma[1] * e2;
        y2 = y1;
        y1 = y;
        e2 = e1;
        e1 = e;
        if i >= burn_in {
            out.push(y / sd);
        }
    }
    out
}

/// Mean function `μ` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFn {
    #[default]
    Zero,
    /// `μ(x) = slope·x`
    Linear {
        #[serde(default = "one")]
        slope: f64,
    },
    /// `μ(x) = amplitude·sin(2πx)`
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `0` for `x < location`, `height` for `x ≥ location`.
    Step { height: f64, location: f64 },
    /// Linear interpolation between `(x, y)` knots sorted by `x`, constant
    /// beyond the outer knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

fn one() -> f64 {
    1.0
}

impl MeanFn {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("mean function: {m}")));
        match self {
            MeanFn::Zero => Ok(()),
            MeanFn::Linear { slope } if !slope.is_finite() => bad("non-finite slope"),
            MeanFn::Sine { amplitude } if !amplitude.is_finite() => bad("non-finite amplitude"),
            MeanFn::Step { height, location } if !height.is_finite() || !location.is_finite() => {
                bad("non-finite step")
            }
            MeanFn::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("no knots");
                }
                if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return bad("non-finite knot");
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return bad("knots must be strictly increasing in x");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MeanFn::Zero => 0.0,
            MeanFn::Linear { slope } => slope * x,
            MeanFn::Sine { amplitude } => amplitude * (2.0 * PI * x).sin(),
            MeanFn::Step { height, location } => {
                if x >= *location {
                    *height
                } else {
                    0.0
                }
            }
            MeanFn::PiecewiseLinear { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = knots.partition_point(|&(kx, _)| kx <= x);
                let (x0, y0) = knots[k - 1];
                let (x1, y1) = knots[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Scale function `σ` on `[0, 1]`; values are standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarianceFn {
    Constant {
        sigma: f64,
    },
    /// `levels[k]` on `[breakpoints[k−1], breakpoints[k])`, right-continuous.
    Piecewise {
        levels: Vec<f64>,
        breakpoints: Vec<f64>,
    },
    /// `σ(x) = 1 + amplitude·sin(4πx)`.
    SineModulated {
        amplitude: f64,
    },
}

impl VarianceFn {
    pub fn constant(sigma: f64) -> Result<Self> {
        let v = VarianceFn::Constant { sigma };
        v.validate()?;
        Ok(v)
    }

    pub fn piecewise(levels: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        let v = VarianceFn::Piecewise {
            levels,
            breakpoints,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn sine_modulated(amplitude: f64) -> Result<Self> {
        let v = VarianceFn::SineModulated { amplitude };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(format!("variance function: {m}")));
        match self {
            VarianceFn::Constant { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
            }
            VarianceFn::Piecewise {
                levels,
                breakpoints,
            } => {
                if levels.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "{} levels need {} breakpoints, got {}",
                        levels.len(),
                        levels.len().saturating_sub(1),
                        breakpoints.len()
                    ));
                }
                if levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return bad("levels must be positive".into());
                }
                if breakpoints.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
                    return bad("breakpoints must lie in (0, 1)".into());
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("breakpoints must be strictly increasing".into());
                }
            }
            VarianceFn::SineModulated { amplitude } => {
                if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
                    return bad(format!("|amplitude| must be below 1, got {amplitude}"));
                }
            }
        }
        Ok(())
    }

    /// `σ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            VarianceFn::Constant { sigma } => *sigma,
            VarianceFn::Piecewise {
                levels,
                breakpoints,
            } => levels[breakpoints.partition_point(|&b| b <= x)],
            VarianceFn::SineModulated { amplitude } => 1.0 + amplitude * (4.0 * PI * x).sin(),
        }
    }

    /// `(length, σ)` of each constant piece, or `None` if `σ` is not
    /// piecewise constant.
    pub fn pieces(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            VarianceFn::Constant { sigma } => Some(vec![(1.0, *sigma)]),
            VarianceFn::Piecewise {
                levels,
                breakpoints,
            } => {
                let mut edges = Vec::with_capacity(levels.len() + 1);
                edges.push(0.0);
                edges.extend_from_slice(breakpoints);
                edges.push(1.0);
                Some(
                    edges
                        .windows(2)
                        .zip(levels)
                        .map(|(w, &l)| (w[1] - w[0], l))
                        .collect(),
                )
            }
            VarianceFn::SineModulated { .. } => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self.pieces() {
            Some(p) => p.iter().all(|&(_, l)| l == p[0].1),
            None => matches!(self, VarianceFn::SineModulated { amplitude } if *amplitude == 0.0),
        }
    }
}

/// Local alternatives with effect sizes of order `n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AltId {
    A1,
    A2,
    A3,
    A4,
}

impl AltId {
    pub const ALL: [AltId; 4] = [AltId::A1, AltId::A2, AltId::A3, AltId::A4];
}

impl fmt::Display for AltId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AltId::A1 => "A1",
            AltId::A2 => "A2",
            AltId::A3 => "A3",
            AltId::A4 => "A4",
        };
        f.write_str(s)
    }
}

impl FromStr for AltId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" => Ok(AltId::A1),
            "A2" => Ok(AltId::A2),
            "A3" => Ok(AltId::A3),
            "A4" => Ok(AltId::A4),
            other => Err(Error::InvalidParameter(format!("unknown alternative id {other:?}"))),
        }
    }
}

pub fn make_alternative(id: AltId, n: usize) -> Result<VarianceFn> {
    make_alternative_with_ref(id, n, DEFAULT_N_REF)
}

/// Scale function of alternative `id` at sample length `n`, with effect
/// size `0.2·√(n_ref/n)` (steps) or sine amplitude `0.1·√(n_ref/n)`.
pub fn make_alternative_with_ref(id: AltId, n: usize, n_ref: f64) -> Result<VarianceFn> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let scale = (n_ref / n as f64).sqrt();
    let high = 1.0 + 0.2 * scale;
    match id {
        AltId::A1 => VarianceFn::piecewise(vec![1.0, high], vec![0.5]),
        AltId::A2 => VarianceFn::piecewise(vec![1.0, high, 1.0], vec![1.0 / 3.0, 2.0 / 3.0]),
        AltId::A3 => VarianceFn::piecewise(
            vec![1.0, high, 1.0, high, 1.0],
            vec![0.2, 0.4, 0.6, 0.8],
        ),
        AltId::A4 => VarianceFn::sine_modulated(0.1 * scale),
    }
}

/// Complete data-generating model for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub noise: NoiseSpec,
    #[serde(default)]
    pub mean: MeanFn,
    pub variance: VarianceFn,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.mean.validate()?;
        self.variance.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        Ok(())
    }
}

/// `X_i = σ(i/n)·Y_i + μ(i/n)` for `i = 1..=n`.
pub fn generate_sample(spec: &ScenarioSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let noise = generate_noise(&spec.noise, spec.n, spec.seed)?;
    compose(spec, noise.values())
}

pub(crate) fn compose(spec: &ScenarioSpec, noise: &[f64]) -> Result<TimeSeries> {
    let n = noise.len() as f64;
    let values = noise
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let x = (i + 1) as f64 / n;
            spec.variance.eval(x) * y + spec.mean.eval(x)
        })
        .collect();
    TimeSeries::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
    }

    fn lag1_autocorr(v: &[f64]) -> f64 {
        let (m, var) = mean_var(v);
        let n = v.len() as f64;
        v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / n / var
    }

    #[test]
    fn iid_normal_moments() {
        let n = 1_000_000;
        let y = generate_noise(&NoiseSpec::IidNormal, n, 7).unwrap();
        let (m, v) = mean_var(y.values());
        assert!(m.abs() < 4.0 / (n as f64).sqrt(), "mean {m}");
        assert!((v - 1.0).abs() < 0.02, "var {v}");
    }

    #[test]
    fn standardized_processes_have_unit_variance() {
        let specs = [
            NoiseSpec::IidExponentialCentered,
            NoiseSpec::ar1(0.7),
            NoiseSpec::study_arma22(),
            NoiseSpec::study_garch11(),
        ];
        for spec in specs {
            let y = generate_noise(&spec, 1_000_000, 11).unwrap();
            let (m, v) = mean_var(y.values());
            assert!(m.abs() < 0.02, "{spec:?}: mean {m}");
            assert!((v - 1.0).abs() < 0.05, "{spec:?}: var {v}");
        }
    }

    #[test]
    fn ar1_lag_one_autocorrelation() {
        let y = generate_noise(&NoiseSpec::ar1(0.4), 1_000_000, 3).unwrap();
        let r = lag1_autocorr(y.values());
        assert!((r - 0.4).abs() < 0.01, "rho(1) = {r}");
    }

    #[test]
    fn garch_raw_unconditional_variance() {
        let spec = NoiseSpec::study_garch11();
        // ω/(1 − a − β) = 0.1/0.1
        assert!((spec.raw_marginal_sd() - 1.0).abs() < 1e-12);
        let y = generate_noise(&spec, 2_000_000, 5).unwrap();
        let (_, v) = mean_var(y.values());
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn arma_variance_matches_psi_weights() {
        // Yule-Walker check of γ(0) for the ARMA(2,2) of the study
        let spec = NoiseSpec::study_arma22();
        let sd = spec.raw_marginal_sd();
        let y = generate_noise_with_burn_in(&spec, 2_000_000, 9, 1000).unwrap();
        let (_, v) = mean_var(y.values());
        assert!((v - 1.0).abs() < 0.02, "standardized var {v}, raw sd {sd}");
    }

    #[test]
    fn rejects_nonstationary_specs() {
        assert!(matches!(
            generate_noise(&NoiseSpec::ar1(1.0), 10, 0),
            Err(Error::Nonstationary(_))
        ));
        let explosive = NoiseSpec::Arma22 {
            ar: [0.5, 0.6],
            ma: [0.0, 0.0],
        };
        assert!(explosive.validate().is_err());
        let garch = NoiseSpec::Garch11 {
            omega: 0.1,
            alpha: 0.3,
            beta: 0.7,
        };
        assert!(garch.validate().is_err());
        assert!(NoiseSpec::study_arma22().validate().is_ok());
    }

    #[test]
    fn ar2_root_check_matches_triangle() {
        for &(a1, a2) in &[(0.8f64, -0.4f64), (1.2, -0.5), (0.5, 0.49), (-1.5, -0.6), (0.0, -0.99)] {
            let triangle = a1 + a2 < 1.0 && a2 - a1 < 1.0 && a2.abs() < 1.0;
            assert_eq!(ar_roots_outside_unit_circle([a1, a2]), triangle, "({a1}, {a2})");
        }
        for &(a1, a2) in &[(0.6, 0.5), (-0.6, 0.5), (0.0, 1.2)] {
            assert!(!ar_roots_outside_unit_circle([a1, a2]));
        }
    }

    #[test]
    fn reproducible_given_seed() {
        for spec in [NoiseSpec::IidNormal, NoiseSpec::study_garch11(), NoiseSpec::study_arma22()] {
            let a = generate_noise(&spec, 500, 42).unwrap();
            let b = generate_noise(&spec, 500, 42).unwrap();
            let c = generate_noise(&spec, 500, 43).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn alternative_examples() {
        let a1 = make_alternative(AltId::A1, 2000).unwrap();
        assert_eq!(a1.eval(0.25), 1.0);
        assert!((a1.eval(0.5) - 1.2).abs() < 1e-12);
        let a1 = make_alternative(AltId::A1, 500).unwrap();
        assert!((a1.eval(0.75) - 1.4).abs() < 1e-12);
        let a4 = make_alternative(AltId::A4, 2000).unwrap();
        assert_eq!(a4.eval(0.0), 1.0);
        assert!((a4.eval(0.125) - 1.1).abs() < 1e-12);
        let a3 = make_alternative(AltId::A3, 2000).unwrap();
        let levels: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&x| a3.eval(x)).collect();
        assert_eq!(levels.len(), 5);
        assert!((levels[1] - 1.2).abs() < 1e-12 && (levels[3] - 1.2).abs() < 1e-12);
        assert_eq!((levels[0], levels[2], levels[4]), (1.0, 1.0, 1.0));
        assert!("A5".parse::<AltId>().is_err());
        assert_eq!("a2".parse::<AltId>().unwrap(), AltId::A2);
    }

    #[test]
    fn variance_fn_invariants() {
        assert!(VarianceFn::constant(0.0).is_err());
        assert!(VarianceFn::piecewise(vec![1.0, 2.0], vec![0.6, 0.7]).is_err());
        assert!(VarianceFn::piecewise(vec![1.0, 2.0, 1.0], vec![0.6, 0.4]).is_err());
        assert!(VarianceFn::piecewise(vec![1.0, -2.0], vec![0.5]).is_err());
        assert!(VarianceFn::sine_modulated(1.0).is_err());
        let pieces = VarianceFn::piecewise(vec![1.0, 2.0, 3.0], vec![0.25, 0.5])
            .unwrap()
            .pieces()
            .unwrap();
        assert_eq!(pieces, vec![(0.25, 1.0), (0.25, 2.0), (0.5, 3.0)]);
    }

    #[test]
    fn mean_functions() {
        let pl = MeanFn::PiecewiseLinear {
            knots: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)],
        };
        assert!((pl.eval(0.25) - 0.5).abs() < 1e-15);
        assert!((pl.eval(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(MeanFn::Step { height: 2.0, location: 0.5 }.eval(0.5), 2.0);
        assert_eq!(MeanFn::Step { height: 2.0, location: 0.5 }.eval(0.49), 0.0);
        assert!(MeanFn::Sine { amplitude: 1.0 }.eval(0.25) - 1.0 < 1e-15);
        let bad = MeanFn::PiecewiseLinear {
            knots: vec![(0.5, 0.0), (0.5, 1.0)],
        };
        assert!(bad.validate().is_err());
    }

    fn scenario(variance: VarianceFn, mean: MeanFn) -> ScenarioSpec {
        ScenarioSpec {
            noise: NoiseSpec::IidNormal,
            mean,
            variance,
            n: 1000,
            seed: 17,
        }
    }

    #[test]
    fn sample_composition() {
        let unit = scenario(VarianceFn::constant(1.0).unwrap(), MeanFn::Zero);
        let x = generate_sample(&unit).unwrap();
        let y = generate_noise(&NoiseSpec::IidNormal, 1000, 17).unwrap();
        assert_eq!(x, y);

        let triple = scenario(VarianceFn::constant(3.0).unwrap(), MeanFn::Zero);
        let x3 = generate_sample(&triple).unwrap();
        for (a, b) in x3.values().iter().zip(x.values()) {
            assert_eq!(*a, 3.0 * b);
        }
    }

    #[test]
    fn piecewise_sample_recovers_noise() {
        let v = VarianceFn::piecewise(vec![1.0, 2.5, 0.5], vec![0.3, 0.6]).unwrap();
        let spec = scenario(v.clone(), MeanFn::Linear { slope: 1.0 });
        let x = generate_sample(&spec).unwrap();
        let y = generate_noise(&NoiseSpec::IidNormal, 1000, 17).unwrap();
        for (i, (xi, yi)) in x.values().iter().zip(y.values()).enumerate() {
            let t = (i + 1) as f64 / 1000.0;
            let rec = (xi - t) / v.eval(t);
            assert!((rec - yi).abs() <= 1e-12 * (1.0 + yi.abs()), "i = {i}");
        }
    }

    #[test]
    fn burn_in_doubling_leaves_variance_unchanged() {
        let spec = NoiseSpec::study_garch11();
        let a = generate_noise_with_burn_in(&spec, 400_000, 21, 1000).unwrap();
        let b = generate_noise_with_burn_in(&spec, 400_000, 21, 2000).unwrap();
        let (_, va) = mean_var(a.values());
        let (_, vb) = mean_var(b.values());
        assert!((va - vb).abs() < 0.1, "{va} vs {vb}");
    }

    #[test]
    fn exponential_kappa_matches_simulation() {
        // fourth-moment check of the closed forms against simulated E − 1
        let y = generate_noise(&NoiseSpec::IidExponentialCentered, 2_000_000, 8).unwrap();
        let v = y.values();
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let (_, var_sq) = mean_var(&sq);
        let k = NoiseSpec::IidExponentialCentered.squared_long_run_sd(false).unwrap();
        assert!((var_sq - k * k).abs() / (k * k) < 0.05, "{var_sq} vs {}", k * k);
    }

    #[test]
    fn gaussian_kappa_closed_forms() {
        let k = NoiseSpec::IidNormal.squared_long_run_sd(false).unwrap();
        assert!((k - 2f64.sqrt()).abs() < 1e-12);
        let k = NoiseSpec::IidNormal.squared_long_run_sd(true).unwrap();
        assert!((k - 3f64.sqrt()).abs() < 1e-12);
        // AR(1): 2·Σ_k φ^{2|k|} = 2(1 + φ²)/(1 − φ²)
        let phi: f64 = 0.4;
        let k = NoiseSpec::ar1(phi).squared_long_run_sd(false).unwrap();
        let expected = (2.0 * (1.0 + phi * phi) / (1.0 - phi * phi)).sqrt();
        assert!((k - expected).abs() < 1e-12);
        assert!(NoiseSpec::study_garch11().squared_long_run_sd(true).is_none());
    }
}
