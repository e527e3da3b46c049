//! Linear MMSE estimation of the coefficient vector from noisy filtered samples.
//!
//! Observation model: `Y = Q L X + Z` with `Z ~ N(0, sigma^2 I)`.
//! Two algebraic routes to the error covariance are kept side by side:
//! the `M x M` route through `Pi` and the `2N x 2N` route through `Gamma`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_off_diagonal, Cholesky, SymMatrix};
use crate::schemes::{check_prop4_condition, check_thm7_condition, SamplingScheme};
use crate::signal::{evaluate, CoefficientVector, SignalSpec};

/// Slack on the passivity bound `|H|^2 <= 1`.
pub const PASSIVITY_TOL: f64 = 1e-12;

/// Pre-sampling filter gains `H(l w0)` for `l = N1..N2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    gains: Vec<Complex64>,
}

impl FilterSpec {
    pub fn new(gains: Vec<Complex64>) -> Result<Self> {
        for (i, g) in gains.iter().enumerate() {
            let gain_sq = g.norm_sqr();
            if !gain_sq.is_finite() || gain_sq > 1.0 + PASSIVITY_TOL {
                return Err(Error::FilterViolation { harmonic: i, gain_sq });
            }
        }
        Ok(Self { gains })
    }

    pub fn allpass(n: usize) -> Self {
        Self { gains: vec![Complex64::new(1.0, 0.0); n] }
    }

    /// Unit gain on harmonics `start..start+width`, zero elsewhere in the band.
    pub fn lowpass(spec: &SignalSpec, start: usize, width: usize) -> Result<Self> {
        if start < spec.n1() || start + width > spec.n2() + 1 {
            return Err(Error::InvalidArgument(format!(
                "pass band [{start}, {}) must lie inside [{}, {}]",
                start + width,
                spec.n1(),
                spec.n2()
            )));
        }
        let gains = spec
            .harmonics()
            .map(|l| {
                let on = l >= start && l < start + width;
                Complex64::new(if on { 1.0 } else { 0.0 }, 0.0)
            })
            .collect();
        Ok(Self { gains })
    }

    /// Every gain multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.gains.iter().map(|g| g * alpha).collect())
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// `a_l = |H(l w0)|^2`.
    pub fn gain_squares(&self) -> Vec<f64> {
        self.gains.iter().map(|g| g.norm_sqr()).collect()
    }

    pub fn is_allpass(&self) -> bool {
        self.gains.iter().all(|g| (g - Complex64::new(1.0, 0.0)).norm() <= PASSIVITY_TOL)
    }

    fn check_band(&self, spec: &SignalSpec) -> Result<()> {
        if self.gains.len() != spec.n() {
            return Err(Error::DimensionMismatch(format!(
                "filter has {} gains, band has {} harmonics",
                self.gains.len(),
                spec.n()
            )));
        }
        Ok(())
    }
}

/// JSON filter description, resolved against a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterConfig {
    Gains(GainsJson),
    Allpass(AllpassJson),
    Lowpass(LowpassJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsJson {
    pub gains: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllpassJson {
    pub allpass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowpassJson {
    pub lowpass: LowpassBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowpassBand {
    pub start: usize,
    pub width: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig::Allpass(AllpassJson { allpass: true })
    }
}

impl FilterConfig {
    pub fn resolve(&self, spec: &SignalSpec) -> Result<FilterSpec> {
        let f = match self {
            FilterConfig::Gains(g) => {
                FilterSpec::new(g.gains.iter().map(|&[re, im]| Complex64::new(re, im)).collect())?
            }
            FilterConfig::Allpass(a) if a.allpass => FilterSpec::allpass(spec.n()),
            FilterConfig::Allpass(_) => {
                return Err(Error::InvalidArgument("\"allpass\": false names no filter".into()))
            }
            FilterConfig::Lowpass(lp) => FilterSpec::lowpass(spec, lp.lowpass.start, lp.lowpass.width)?,
        };
        f.check_band(spec)?;
        Ok(f)
    }
}

/// `l t / T` reduced mod 1, times `2 pi`.
fn phase(l: usize, t: f64, period: f64) -> f64 {
    2.0 * PI * (l as f64 * t / period).rem_euclid(1.0)
}

/// `M x 2N` matrix with rows `[cos(l w0 t_i).., sin(l w0 t_i)..]`.
pub fn build_q(s: &SamplingScheme, spec: &SignalSpec) -> DMatrix<f64> {
    let n = spec.n();
    let period = spec.period();
    let mut q = DMatrix::zeros(s.len(), 2 * n);
    for (i, &t) in s.instants().iter().enumerate() {
        for (j, l) in spec.harmonics().enumerate() {
            let (sin, cos) = phase(l, t, period).sin_cos();
            q[(i, j)] = cos;
            q[(i, n + j)] = sin;
        }
    }
    q
}

/// `[[L1, L2], [-L2, L1]]` with `L1 = diag(Re H)`, `L2 = diag(Im H)`.
pub fn build_l(f: &FilterSpec) -> DMatrix<f64> {
    let n = f.len();
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    for (j, g) in f.gains().iter().enumerate() {
        l[(j, j)] = g.re;
        l[(n + j, n + j)] = g.re;
        l[(j, n + j)] = g.im;
        l[(n + j, j)] = -g.im;
    }
    l
}

/// Estimator, error covariance and distortion moments for one configuration.
#[derive(Debug, Clone)]
pub struct EstimatorBundle {
    pub q: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// Error covariance from the `Pi` route.
    pub ce: DMatrix<f64>,
    /// Error covariance from the `Gamma` route.
    pub ce_gamma: DMatrix<f64>,
    /// `Tr(Ce) / 2`.
    pub d: f64,
    /// `Tr(Ce^2)`.
    pub v: f64,
    pub d_gamma: f64,
    pub v_gamma: f64,
}

impl EstimatorBundle {
    /// Largest relative disagreement between the two routes over `D`, `V` and `Ce`.
    pub fn route_discrepancy(&self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let scale = self.ce.amax().max(f64::MIN_POSITIVE);
        let ce_gap = (&self.ce - &self.ce_gamma).amax() / scale;
        rel(self.d, self.d_gamma).max(rel(self.v, self.v_gamma)).max(ce_gap)
    }

    /// `Q L`.
    pub fn observation_matrix(&self) -> DMatrix<f64> {
        &self.q * &self.l
    }

    /// `W y` for an observation vector `y`.
    pub fn estimate(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.w * y
    }
}

fn require_noise(spec: &SignalSpec) -> Result<f64> {
    let s2 = spec.noise_variance();
    if s2 > 0.0 {
        Ok(s2)
    } else {
        Err(Error::NoiseRequired)
    }
}

fn check_inputs(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    f.check_band(spec)?;
    if (s.period() - spec.period()).abs() > 1e-12 * spec.period() {
        return Err(Error::DimensionMismatch(format!(
            "scheme period {} differs from signal period {}",
            s.period(),
            spec.period()
        )));
    }
    require_noise(spec)
}

/// `Ce = C_X - C_X A^T S^-1 A C_X` and `W = C_X A^T S^-1`, where `A = QL` and `S = A C_X A^T + sigma^2 I`.
pub fn mmse_bundle(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<EstimatorBundle> {
    let sigma2 = check_inputs(spec, f, s)?;
    if s.is_empty() {
        return Err(Error::InvalidScheme("estimator needs at least one sample".into()));
    }
    let cx = spec.covariance_diagonal();
    let q = build_q(s, spec);
    let l = build_l(f);
    let a = &q * &l;
    let cx_mat = DMatrix::from_diagonal(&DVector::from_column_slice(&cx));

    let a_cx = &a * &cx_mat;
    let mut s_mat = &a_cx * a.transpose();
    for i in 0..s_mat.nrows() {
        s_mat[(i, i)] += sigma2;
    }
    let chol = Cholesky::factor(&SymMatrix::symmetrized(&s_mat))?;
    // S^-1 A C_X, so W = (S^-1 A C_X)^T.
    let s_inv_a_cx = chol.solve(&a_cx)?;
    let w = s_inv_a_cx.transpose();
    let ce = SymMatrix::symmetrized(&(cx_mat - a_cx.transpose() * &s_inv_a_cx)).into_inner();

    let ce_gamma = gamma_route_covariance(&a, &cx, sigma2)?;

    let d = 0.5 * ce.trace();
    let v = ce.norm_squared();
    let d_gamma = 0.5 * ce_gamma.trace();
    let v_gamma = ce_gamma.norm_squared();
    Ok(EstimatorBundle { q, l, w, ce, ce_gamma, d, v, d_gamma, v_gamma })
}

/// `(I - W A) C_X (I - W A)^T + sigma^2 W W^T`: error covariance of an arbitrary linear estimator `W`.
pub fn error_covariance_for(w: &DMatrix<f64>, a: &DMatrix<f64>, cx: &[f64], sigma2: f64) -> Result<DMatrix<f64>> {
    let n = cx.len();
    if w.nrows() != n || a.ncols() != n || w.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{}, A is {}x{}, C_X has order {n}",
            w.nrows(),
            w.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let mut r = -(w * a);
    for i in 0..n {
        r[(i, i)] += 1.0;
    }
    let cx_mat = DMatrix::from_diagonal(&DVector::from_column_slice(cx));
    let ce = &r * cx_mat * r.transpose() + w * w.transpose() * sigma2;
    Ok(SymMatrix::symmetrized(&ce).into_inner())
}

/// `(A^T A / sigma^2 + C_X^-1)^-1`.
fn gamma_route_covariance(a: &DMatrix<f64>, cx: &[f64], sigma2: f64) -> Result<DMatrix<f64>> {
    let mut g = a.transpose() * a / sigma2;
    for (i, c) in cx.iter().enumerate() {
        g[(i, i)] += 1.0 / c;
    }
    Ok(Cholesky::factor(&SymMatrix::symmetrized(&g))?.inverse())
}

/// `Pi^-1 = p Q L L^T Q^T + sigma^2 I`.
pub fn pi_inverse(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<SymMatrix> {
    let sigma2 = check_inputs(spec, f, s)?;
    let p = spec.require_uniform()?;
    let a = build_q(s, spec) * build_l(f);
    let mut m = &a * a.transpose() * p;
    for i in 0..m.nrows() {
        m[(i, i)] += sigma2;
    }
    Ok(SymMatrix::symmetrized(&m))
}

/// `Gamma^-1 = p L^T Q^T Q L + sigma^2 I`.
pub fn gamma_inverse(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<SymMatrix> {
    let sigma2 = check_inputs(spec, f, s)?;
    let p = spec.require_uniform()?;
    let a = build_q(s, spec) * build_l(f);
    let mut m = a.transpose() * &a * p;
    for i in 0..m.nrows() {
        m[(i, i)] += sigma2;
    }
    Ok(SymMatrix::symmetrized(&m))
}

/// Relative off-diagonal mass below which a matrix counts as diagonal.
pub const DIAGONAL_TOL: f64 = 1e-9;

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    let scale = m.diagonal().amax().max(f64::MIN_POSITIVE);
    max_off_diagonal(m) <= DIAGONAL_TOL * scale
}

/// Whether `A C_X A^T + sigma^2 I` and `A^T A / sigma^2 + C_X^-1` are diagonal.
///
/// With equal variances these are `Pi^-1` and `Gamma^-1 / (p sigma^2)`.
pub fn diagonal_structure(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<(bool, bool)> {
    let sigma2 = check_inputs(spec, f, s)?;
    if s.is_empty() {
        return Ok((true, true));
    }
    let cx = spec.covariance_diagonal();
    let a = build_q(s, spec) * build_l(f);
    let cx_mat = DMatrix::from_diagonal(&DVector::from_column_slice(&cx));
    let mut s_mat = &a * cx_mat * a.transpose();
    for i in 0..s_mat.nrows() {
        s_mat[(i, i)] += sigma2;
    }
    let mut g = a.transpose() * &a / sigma2;
    for (i, c) in cx.iter().enumerate() {
        g[(i, i)] += 1.0 / c;
    }
    Ok((is_diagonal(&s_mat), is_diagonal(&g)))
}

/// `(sum p_l, 2 sum p_l^2)`: with no samples `Ce = C_X`.
pub fn no_sample_moments(spec: &SignalSpec) -> (f64, f64) {
    let p = spec.coeff_variances();
    (p.iter().sum(), 2.0 * p.iter().map(|x| x * x).sum::<f64>())
}

/// `D = [(2N - M) p + p sigma^2 Tr(Pi)] / 2`.
pub fn avg_distortion_pi_route(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    require_noise(spec)?;
    let p = spec.require_uniform()?;
    if s.is_empty() {
        return Ok(no_sample_moments(spec).0);
    }
    let chol = Cholesky::factor(&pi_inverse(spec, f, s)?)?;
    let (n2, m) = ((2 * spec.n()) as f64, s.len() as f64);
    Ok(0.5 * ((n2 - m) * p + p * spec.noise_variance() * chol.inverse_trace()))
}

/// `V = p^2 [2N - M + sigma^4 Tr(Pi^2)]`.
pub fn var_distortion_pi_route(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    require_noise(spec)?;
    let p = spec.require_uniform()?;
    if s.is_empty() {
        return Ok(no_sample_moments(spec).1);
    }
    let pi = Cholesky::factor(&pi_inverse(spec, f, s)?)?.inverse();
    let (n2, m) = ((2 * spec.n()) as f64, s.len() as f64);
    let s4 = spec.noise_variance().powi(2);
    Ok(p * p * (n2 - m + s4 * pi.norm_squared()))
}

/// `D = p sigma^2 Tr(Gamma) / 2`.
pub fn avg_distortion_gamma_route(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    require_noise(spec)?;
    let p = spec.require_uniform()?;
    if s.is_empty() {
        return Ok(no_sample_moments(spec).0);
    }
    let tr = Cholesky::factor(&gamma_inverse(spec, f, s)?)?.inverse_trace();
    Ok(0.5 * p * spec.noise_variance() * tr)
}

/// `V = p^2 sigma^4 Tr(Gamma^2)`.
pub fn var_distortion_gamma_route(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    require_noise(spec)?;
    let p = spec.require_uniform()?;
    if s.is_empty() {
        return Ok(no_sample_moments(spec).1);
    }
    let gamma = Cholesky::factor(&gamma_inverse(spec, f, s)?)?.inverse();
    Ok((p * spec.noise_variance()).powi(2) * gamma.norm_squared())
}

/// `D = Tr(Ce) / 2` for any coefficient variances; `M = 0` allowed.
pub fn avg_distortion(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    if s.is_empty() {
        check_inputs(spec, f, s)?;
        return Ok(no_sample_moments(spec).0);
    }
    Ok(mmse_bundle(spec, f, s)?.d)
}

/// `V = Tr(Ce^2)` for any coefficient variances; `M = 0` allowed.
pub fn var_distortion(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    if s.is_empty() {
        check_inputs(spec, f, s)?;
        return Ok(no_sample_moments(spec).1);
    }
    Ok(mmse_bundle(spec, f, s)?.v)
}

/// Sampling-rate regime of a closed-form interpolator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Regime {
    /// `Pi^-1 = (Np + sigma^2) I`.
    HalfLandau,
    /// `Gamma^-1 = (Mp/2 + sigma^2) I`.
    AboveLandau,
}

/// Scalar `c` with `W = c Q^T` on a scheme optimal for `regime`.
pub fn interpolation_gain(spec: &SignalSpec, m: usize, regime: Regime) -> Result<f64> {
    let p = spec.require_uniform()?;
    let s2 = spec.noise_variance();
    let denom = match regime {
        Regime::HalfLandau => spec.n() as f64 * p + s2,
        Regime::AboveLandau => m as f64 * p / 2.0 + s2,
    };
    if denom <= 0.0 {
        return Err(Error::NoiseRequired);
    }
    Ok(p / denom)
}

fn check_regime(spec: &SignalSpec, s: &SamplingScheme, regime: Regime) -> Result<()> {
    let verdict = match regime {
        Regime::HalfLandau => check_prop4_condition(s, spec),
        Regime::AboveLandau => check_thm7_condition(s, spec),
    };
    if verdict.satisfied {
        Ok(())
    } else {
        Err(Error::RegimeMismatch(format!(
            "{regime:?} check fails with worst violation {:.3e} (tolerance {:.3e})",
            verdict.worst_violation, verdict.tolerance
        )))
    }
}

/// `X_hat = c Q^T Y`, valid only on a verified optimal scheme with an all-pass filter.
pub fn interpolate_closed_form(
    spec: &SignalSpec,
    s: &SamplingScheme,
    samples: &[f64],
    regime: Regime,
) -> Result<CoefficientVector> {
    if samples.len() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for {} instants",
            samples.len(),
            s.len()
        )));
    }
    check_regime(spec, s, regime)?;
    let c = interpolation_gain(spec, s.len(), regime)?;
    let n = spec.n();
    let mut out = vec![0.0; 2 * n];
    for (&t, &y) in s.instants().iter().zip(samples) {
        for (j, l) in spec.harmonics().enumerate() {
            let (sin, cos) = phase(l, t, spec.period()).sin_cos();
            out[j] += c * y * cos;
            out[n + j] += c * y * sin;
        }
    }
    Ok(CoefficientVector::new(out))
}

/// `sum_{l=N1}^{N2} cos(l w0 tau)`.
pub fn interpolation_kernel(spec: &SignalSpec, tau: f64) -> f64 {
    spec.harmonics().map(|l| phase(l, tau, spec.period()).cos()).sum()
}

/// `S_hat(t) = c sum_i y_i sum_l cos(l w0 (t - t_i))` on a verified optimal scheme.
pub fn interpolate_at(
    spec: &SignalSpec,
    s: &SamplingScheme,
    samples: &[f64],
    regime: Regime,
    t: f64,
) -> Result<f64> {
    if samples.len() != s.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for {} instants",
            samples.len(),
            s.len()
        )));
    }
    check_regime(spec, s, regime)?;
    let c = interpolation_gain(spec, s.len(), regime)?;
    Ok(c * s
        .instants()
        .iter()
        .zip(samples)
        .map(|(&ti, &y)| y * interpolation_kernel(spec, t - ti))
        .sum::<f64>())
}

/// `S_hat(t)` at every grid point.
pub fn reconstruct_signal(spec: &SignalSpec, coeffs: &CoefficientVector, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter().map(|&t| evaluate(spec, coeffs, t)).collect()
}
