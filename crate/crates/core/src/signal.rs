//! Random band-pass periodic signal model.
//!
//! A signal is `S(t) = sum_{l=N1}^{N2} [A_l cos(l w0 t) + B_l sin(l w0 t)]` with
//! `w0 = 2 pi / T` and independent zero-mean Gaussian coefficients `A_l, B_l`
//! of variance `p_l`. Coefficient vectors are always laid out as the A-block
//! followed by the B-block; every matrix in the crate depends on that order.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which per-harmonic variances count as equal.
const UNIFORM_TOL: f64 = 1e-12;

/// Deterministic generator for stream `stream` of a 64-bit user seed.
///
/// ChaCha is counter based, so distinct streams of the same seed are
/// independent and can be drawn from any worker in any order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalSpecJson", into = "SignalSpecJson")]
pub struct SignalSpec {
    period: f64,
    n1: usize,
    n2: usize,
    coeff_variances: Vec<f64>,
    noise_variance: f64,
}

impl SignalSpec {
    pub fn new(
        period: f64,
        n1: usize,
        n2: usize,
        coeff_variances: Vec<f64>,
        noise_variance: f64,
    ) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidSignal(format!("period T must be positive, got {period}")));
        }
        if n1 < 1 || n2 < n1 {
            return Err(Error::InvalidSignal(format!(
                "band must satisfy 1 <= N1 <= N2, got N1={n1}, N2={n2}"
            )));
        }
        let n = n2 - n1 + 1;
        if coeff_variances.len() != n {
            return Err(Error::InvalidSignal(format!(
                "expected {n} coefficient variances, got {}",
                coeff_variances.len()
            )));
        }
        if let Some(bad) = coeff_variances.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidSignal(format!(
                "coefficient variances must be positive, got {bad}"
            )));
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::InvalidSignal(format!(
                "noise variance must be nonnegative, got {noise_variance}"
            )));
        }
        Ok(Self { period, n1, n2, coeff_variances, noise_variance })
    }

    /// Equal per-harmonic variance `p` on the band `[n1, n1 + n - 1]`.
    pub fn uniform(period: f64, n1: usize, n: usize, p: f64, noise_variance: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSignal("band must contain at least one harmonic".into()));
        }
        Self::new(period, n1, n1 + n - 1, vec![p; n], noise_variance)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Number of active harmonics `N = N2 - N1 + 1`.
    pub fn n(&self) -> usize {
        self.n2 - self.n1 + 1
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn harmonics(&self) -> impl Iterator<Item = usize> + Clone {
        self.n1..=self.n2
    }

    pub fn coeff_variances(&self) -> &[f64] {
        &self.coeff_variances
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// The common variance `p` if all harmonics share it.
    pub fn uniform_variance(&self) -> Option<f64> {
        let p0 = self.coeff_variances[0];
        self.coeff_variances
            .iter()
            .all(|p| (p - p0).abs() <= UNIFORM_TOL * p0)
            .then_some(p0)
    }

    pub fn require_uniform(&self) -> Result<f64> {
        self.uniform_variance().ok_or(Error::UniformVarianceRequired)
    }

    /// `N p / sigma^2`, infinite when the noise vanishes.
    pub fn snr(&self) -> Result<f64> {
        let p = self.require_uniform()?;
        Ok(self.n() as f64 * p / self.noise_variance)
    }

    /// Diagonal of the coefficient covariance, `[p_N1..p_N2, p_N1..p_N2]`.
    pub fn covariance_diagonal(&self) -> Vec<f64> {
        self.coeff_variances.iter().chain(self.coeff_variances.iter()).copied().collect()
    }

    /// Sum of per-harmonic variances; the distortion of the zero estimate.
    pub fn total_variance(&self) -> f64 {
        self.coeff_variances.iter().sum()
    }

    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        Self::new(self.period, self.n1, self.n2, self.coeff_variances.clone(), noise_variance)
    }

    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::new(period, self.n1, self.n2, self.coeff_variances.clone(), self.noise_variance)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalSpecJson {
    #[serde(rename = "T")]
    period: f64,
    #[serde(rename = "N1")]
    n1: usize,
    #[serde(rename = "N2")]
    n2: usize,
    p: VarianceJson,
    sigma2: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum VarianceJson {
    Scalar(f64),
    PerHarmonic(Vec<f64>),
}

impl TryFrom<SignalSpecJson> for SignalSpec {
    type Error = Error;

    fn try_from(raw: SignalSpecJson) -> Result<Self> {
        let variances = match raw.p {
            VarianceJson::Scalar(p) => {
                if raw.n2 < raw.n1 {
                    return Err(Error::InvalidSignal(format!(
                        "band must satisfy 1 <= N1 <= N2, got N1={}, N2={}",
                        raw.n1, raw.n2
                    )));
                }
                vec![p; raw.n2 - raw.n1 + 1]
            }
            VarianceJson::PerHarmonic(v) => v,
        };
        SignalSpec::new(raw.period, raw.n1, raw.n2, variances, raw.sigma2)
    }
}

impl From<SignalSpec> for SignalSpecJson {
    fn from(spec: SignalSpec) -> Self {
        let p = match spec.uniform_variance() {
            Some(p) if spec.coeff_variances.iter().all(|q| *q == p) => VarianceJson::Scalar(p),
            _ => VarianceJson::PerHarmonic(spec.coeff_variances),
        };
        Self { period: spec.period, n1: spec.n1, n2: spec.n2, p, sigma2: spec.noise_variance }
    }
}

/// Signal on the integer time axis: integer period and `N2 < T/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSignalSpec {
    inner: SignalSpec,
}

impl DiscreteSignalSpec {
    pub fn new(spec: SignalSpec) -> Result<Self> {
        let t = spec.period();
        if t.fract() != 0.0 {
            return Err(Error::InvalidSignal(format!("discrete period must be an integer, got {t}")));
        }
        if 2 * spec.n2() as u64 >= t as u64 {
            return Err(Error::InvalidSignal(format!(
                "discrete band requires N2 < T/2, got N2={} with T={t}",
                spec.n2()
            )));
        }
        Ok(Self { inner: spec })
    }

    pub fn period(&self) -> usize {
        self.inner.period() as usize
    }

    pub fn continuous(&self) -> &SignalSpec {
        &self.inner
    }
}

/// Coefficients `[A_N1, .., A_N2, B_N1, .., B_N2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; 2 * n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check_len(&self, spec: &SignalSpec) -> Result<()> {
        if self.0.len() != 2 * spec.n() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector has length {}, expected {}",
                self.0.len(),
                2 * spec.n()
            )));
        }
        Ok(())
    }
}

/// Independent Gaussian coefficients with variance `p_l`, reproducible from `seed`.
pub fn sample_coefficients(spec: &SignalSpec, seed: u64) -> CoefficientVector {
    let mut rng = stream_rng(seed, 0);
    draw_coefficients(spec, &mut rng)
}

pub(crate) fn draw_coefficients<R: rand::Rng + ?Sized>(spec: &SignalSpec, rng: &mut R) -> CoefficientVector {
    let values = spec
        .covariance_diagonal()
        .into_iter()
        .map(|var| {
            let z: f64 = StandardNormal.sample(rng);
            z * var.sqrt()
        })
        .collect();
    CoefficientVector(values)
}

/// `S(t)` for the given coefficients.
pub fn evaluate(spec: &SignalSpec, coeffs: &CoefficientVector, t: f64) -> Result<f64> {
    coeffs.check_len(spec)?;
    Ok(evaluate_unchecked(spec, coeffs.values(), t))
}

pub(crate) fn evaluate_unchecked(spec: &SignalSpec, coeffs: &[f64], t: f64) -> f64 {
    let n = spec.n();
    let tau = t.rem_euclid(spec.period());
    let w0 = spec.omega0();
    spec.harmonics()
        .enumerate()
        .map(|(k, l)| {
            let (s, c) = (l as f64 * w0 * tau).sin_cos();
            coeffs[k] * c + coeffs[n + k] * s
        })
        .sum()
}

/// Time-average squared error `(1/T) int_0^T |S_hat - S|^2 dt = |x - x_hat|^2 / 2`.
pub fn parseval_distortion(spec: &SignalSpec, x: &CoefficientVector, xhat: &CoefficientVector) -> Result<f64> {
    x.check_len(spec)?;
    xhat.check_len(spec)?;
    Ok(half_sq_dist(x.values(), xhat.values()))
}

pub(crate) fn half_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
}
