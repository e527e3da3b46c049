//! Sampling followed by compression of the estimate.
//!
//! The estimate `WY` is orthogonal to the estimation error, so any coder that
//! only sees `WY` adds its own distortion on top of the sampling distortion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{mmse_bundle, FilterSpec};
use crate::linalg::{sym_eigen, SymMatrix};
use crate::montecarlo::{accumulate, Pipeline, MIN_TRIALS};
use crate::schemes::SamplingScheme;
use crate::signal::{half_sq_dist, SignalSpec};

/// Absolute bisection tolerance on the water level.
pub const WATER_LEVEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionReport {
    pub ds: f64,
    pub dc_target: f64,
    pub mu: f64,
    pub nc_lower_bits: f64,
    /// Spectrum of `C_X - Ce`, descending.
    pub eigenvalues: Vec<f64>,
}

/// `sum_i min(lambda_i, mu)`.
fn water_volume(lambda: &[f64], mu: f64) -> f64 {
    lambda.iter().map(|&l| l.min(mu)).sum()
}

/// Water level `mu` with `sum min(lambda_i, mu) = min(target, sum lambda_i)`, and the
/// rate `sum (1/2) log2(lambda_i / min(lambda_i, mu))` in bits.
///
/// Nonpositive eigenvalues carry no rate and no distortion.
pub fn reverse_waterfill(eigenvalues: &[f64], dc_target: f64) -> Result<(f64, f64)> {
    if !(dc_target.is_finite() && dc_target > 0.0) {
        return Err(Error::InvalidArgument(format!("distortion target must be positive, got {dc_target}")));
    }
    let lambda: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let top = lambda.iter().copied().fold(0.0, f64::max);
    if dc_target >= lambda.iter().sum::<f64>() {
        return Ok((top, 0.0));
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > WATER_LEVEL_TOL {
        let mid = 0.5 * (lo + hi);
        if water_volume(&lambda, mid) < dc_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut mu = 0.5 * (lo + hi);
    // On the bracketing linear piece the level is exact: mu = (target - submerged) / active.
    let (submerged, active) = lambda.iter().fold((0.0, 0usize), |(s, a), &l| {
        if l <= mu {
            (s + l, a)
        } else {
            (s, a + 1)
        }
    });
    if active > 0 {
        let exact = (dc_target - submerged) / active as f64;
        if (exact - mu).abs() <= 2.0 * WATER_LEVEL_TOL {
            mu = exact;
        }
    }
    let bits = lambda
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| 0.5 * (l / l.min(mu)).log2())
        .sum();
    Ok((mu, bits))
}

/// `Ds = Tr(Ce) / 2`.
pub fn sampling_distortion(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme) -> Result<f64> {
    Ok(mmse_bundle(spec, f, s)?.d)
}

/// Rate lower bound for coding `WY` to distortion `dc_target`, by reverse water-filling on `C_X - Ce`.
pub fn waterfill_rate_bound(
    spec: &SignalSpec,
    f: &FilterSpec,
    s: &SamplingScheme,
    dc_target: f64,
) -> Result<CompressionReport> {
    let bundle = mmse_bundle(spec, f, s)?;
    let cx = spec.covariance_diagonal();
    let mut cov = -bundle.ce.clone();
    for (i, c) in cx.iter().enumerate() {
        cov[(i, i)] += c;
    }
    let eigenvalues: Vec<f64> = sym_eigen(&SymMatrix::symmetrized(&cov), false)?
        .eigenvalues
        .into_iter()
        .map(|l| l.max(0.0))
        .collect();
    let (mu, nc_lower_bits) = reverse_waterfill(&eigenvalues, dc_target)?;
    Ok(CompressionReport { ds: bundle.d, dc_target, mu, nc_lower_bits, eigenvalues })
}

/// Monte Carlo evidence that total distortion splits into sampling plus compression parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub trials: usize,
    pub delta: f64,
    /// Empirical `|X - X_hat|^2 / 2`.
    pub total_emp: f64,
    pub ds_analytic: f64,
    /// Empirical `|WY - X_hat|^2 / 2`.
    pub dc_emp: f64,
    /// `total_emp - (ds_analytic + dc_emp)`.
    pub residual: f64,
    /// Standard error of the per-trial residual.
    pub residual_se: f64,
}

impl DecompositionReport {
    pub fn residual_z(&self) -> f64 {
        self.residual.abs() / self.residual_se
    }
}

/// Mid-tread uniform quantizer with step `delta`.
pub fn quantize(x: f64, delta: f64) -> f64 {
    delta * (x / delta).round()
}

/// Quantizes each coordinate of `WY` with step `delta` and compares the three distortions.
pub fn decomposition_check(
    spec: &SignalSpec,
    f: &FilterSpec,
    s: &SamplingScheme,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<DecompositionReport> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("quantizer step must be positive, got {delta}")));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let bundle = mmse_bundle(spec, f, s)?;
    let pipe = Pipeline::new(spec, &bundle);
    let ds = bundle.d;
    let acc = accumulate(
        trials,
        seed,
        &[ds, 0.0, ds],
        || (pipe.scratch(), vec![0.0; 2 * spec.n()]),
        |(sc, q), rng, out| {
            pipe.observe(rng, sc);
            pipe.estimate(sc);
            for (qi, &e) in q.iter_mut().zip(&sc.xhat) {
                *qi = quantize(e, delta);
            }
            let total = half_sq_dist(&sc.x, q);
            let dc = half_sq_dist(&sc.xhat, q);
            out[0] = total;
            out[1] = dc;
            out[2] = total - dc;
        },
    );
    let (total_emp, dc_emp) = (acc[0].mean(), acc[1].mean());
    Ok(DecompositionReport {
        trials,
        delta,
        total_emp,
        ds_analytic: ds,
        dc_emp,
        residual: total_emp - (ds + dc_emp),
        residual_se: acc[2].mean_se(),
    })
}
