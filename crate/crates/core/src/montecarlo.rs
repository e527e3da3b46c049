//! Monte Carlo validation of the analytic distortion moments.
//!
//! Trial `i` draws from stream `i + 1` of the user seed (stream 0 is reserved
//! for single draws), so results do not depend on how trials are scheduled.
//! Trials run in fixed-size chunks in parallel; chunk accumulators are merged
//! in chunk order, which makes every statistic bit-reproducible.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{
    error_covariance_for, interpolate_closed_form, mmse_bundle, EstimatorBundle, FilterSpec, Regime,
};
use crate::schemes::{check_prop4_condition, check_thm7_condition, SamplingScheme};
use crate::signal::{evaluate, half_sq_dist, sample_coefficients, stream_rng, SignalSpec};

/// Trials per parallel work unit.
pub const CHUNK: usize = 2048;
/// Smallest trial count accepted by the simulators.
pub const MIN_TRIALS: usize = 100;

/// Shifted power sums `sum (x - c)^k`, `k = 1..4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    count: u64,
    shift: f64,
    sums: [f64; 4],
}

impl Moments {
    /// `shift` should be close to the mean to limit cancellation.
    pub fn new(shift: f64) -> Self {
        Self { count: 0, shift, sums: [0.0; 4] }
    }

    pub fn push(&mut self, x: f64) {
        let y = x - self.shift;
        let y2 = y * y;
        self.count += 1;
        self.sums[0] += y;
        self.sums[1] += y2;
        self.sums[2] += y2 * y;
        self.sums[3] += y2 * y2;
    }

    /// Accumulators must share the same shift.
    pub fn merge(&mut self, other: &Moments) {
        debug_assert_eq!(self.shift, other.shift);
        self.count += other.count;
        for k in 0..4 {
            self.sums[k] += other.sums[k];
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn raw(&self, k: usize) -> f64 {
        self.sums[k - 1] / self.count as f64
    }

    pub fn mean(&self) -> f64 {
        self.shift + self.raw(1)
    }

    /// Biased central moments `(m2, m4)`.
    fn central(&self) -> (f64, f64) {
        let m = self.raw(1);
        let (r2, r3, r4) = (self.raw(2), self.raw(3), self.raw(4));
        let m2 = r2 - m * m;
        let m4 = r4 - 4.0 * m * r3 + 6.0 * m * m * r2 - 3.0 * m.powi(4);
        (m2.max(0.0), m4.max(0.0))
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.count as f64;
        self.central().0 * n / (n - 1.0)
    }

    pub fn mean_se(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// `sqrt((m4 - m2^2 (n-3)/(n-1)) / n)`.
    pub fn variance_se(&self) -> f64 {
        let n = self.count as f64;
        let (m2, m4) = self.central();
        ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)).max(0.0) / n).sqrt()
    }
}

/// Runs `trials` independent trials, each writing `shifts.len()` values.
///
/// `init` builds per-chunk scratch state.
pub(crate) fn accumulate<S, I, F>(trials: usize, seed: u64, shifts: &[f64], init: I, trial: F) -> Vec<Moments>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let k = shifts.len();
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut state = init();
            let mut acc: Vec<Moments> = shifts.iter().map(|&s| Moments::new(s)).collect();
            let mut out = vec![0.0; k];
            for i in (c * CHUNK)..((c + 1) * CHUNK).min(trials) {
                let mut rng = stream_rng(seed, i as u64 + 1);
                trial(&mut state, &mut rng, &mut out);
                for (m, &v) in acc.iter_mut().zip(&out) {
                    m.push(v);
                }
            }
            acc
        })
        .collect();
    let mut total: Vec<Moments> = shifts.iter().map(|&s| Moments::new(s)).collect();
    for part in &partial {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

/// Dense row-major copies of `A = QL` and `W` for allocation-free trials.
#[derive(Debug, Clone)]
pub(crate) struct Pipeline {
    m: usize,
    n2: usize,
    a: Vec<f64>,
    w: Vec<f64>,
    sd: Vec<f64>,
    sigma: f64,
}

/// Per-chunk buffers for one trial.
pub(crate) struct Scratch {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xhat: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

impl Pipeline {
    pub fn new(spec: &SignalSpec, bundle: &EstimatorBundle) -> Self {
        Self::with_estimator(spec, &bundle.observation_matrix(), &bundle.w)
    }

    pub fn with_estimator(spec: &SignalSpec, a: &DMatrix<f64>, w: &DMatrix<f64>) -> Self {
        Self {
            m: a.nrows(),
            n2: a.ncols(),
            a: row_major(a),
            w: row_major(w),
            sd: spec.covariance_diagonal().iter().map(|v| v.sqrt()).collect(),
            sigma: spec.noise_variance().sqrt(),
        }
    }

    pub fn scratch(&self) -> Scratch {
        Scratch { x: vec![0.0; self.n2], y: vec![0.0; self.m], xhat: vec![0.0; self.n2] }
    }

    /// Draws `X` then `Z`, and forms `Y = A X + Z`.
    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R, sc: &mut Scratch) {
        for (x, sd) in sc.x.iter_mut().zip(&self.sd) {
            let z: f64 = StandardNormal.sample(rng);
            *x = z * sd;
        }
        for i in 0..self.m {
            let row = &self.a[i * self.n2..(i + 1) * self.n2];
            let z: f64 = StandardNormal.sample(rng);
            sc.y[i] = row.iter().zip(&sc.x).map(|(a, x)| a * x).sum::<f64>() + self.sigma * z;
        }
    }

    /// `X_hat = W Y` for the pipeline's own estimator.
    pub fn estimate(&self, sc: &mut Scratch) {
        Self::apply(&self.w, self.m, &sc.y, &mut sc.xhat);
    }

    pub fn apply(w: &[f64], m: usize, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &w[j * m..(j + 1) * m];
            *o = row.iter().zip(y).map(|(w, y)| w * y).sum();
        }
    }
}

/// Empirical and analytic moments of the time-average distortion `d = |X - X_hat|^2 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub trials: usize,
    pub d_emp: f64,
    pub d_se: f64,
    pub var_emp: f64,
    /// Standard error of `var_emp`, from the fourth central moment.
    pub var_se: f64,
    pub d_analytic: f64,
    pub v_analytic: f64,
}

impl SimResult {
    /// `|D_emp - D| / SE`.
    pub fn mean_z(&self) -> f64 {
        (self.d_emp - self.d_analytic).abs() / self.d_se
    }

    /// `|2 Var_emp - V| / SE(2 Var_emp)`: `Var(d) = Tr(Ce^2) / 2`.
    pub fn variance_z(&self) -> f64 {
        (2.0 * self.var_emp - self.v_analytic).abs() / (2.0 * self.var_se)
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Full pipeline: draw, filter, sample, add noise, estimate with the MMSE `W`.
pub fn run_sim(spec: &SignalSpec, f: &FilterSpec, s: &SamplingScheme, trials: usize, seed: u64) -> Result<SimResult> {
    check_trials(trials)?;
    let bundle = mmse_bundle(spec, f, s)?;
    let pipe = Pipeline::new(spec, &bundle);
    let acc = accumulate(trials, seed, &[bundle.d], || pipe.scratch(), |sc, rng, out| {
        pipe.observe(rng, sc);
        pipe.estimate(sc);
        out[0] = half_sq_dist(&sc.x, &sc.xhat);
    });
    let m = &acc[0];
    Ok(SimResult {
        trials,
        d_emp: m.mean(),
        d_se: m.mean_se(),
        var_emp: m.variance(),
        var_se: m.variance_se(),
        d_analytic: bundle.d,
        v_analytic: bundle.v,
    })
}

/// Paired comparison of the MMSE estimator against one with a single perturbed entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationResult {
    pub trials: usize,
    /// Mean of `d_perturbed - d_optimal` over trials.
    pub d_increase: f64,
    pub d_increase_se: f64,
    /// Mean of `(d_perturbed - D'_)^2 - (d_optimal - D)^2`, centered at the analytic means.
    pub var_increase: f64,
    pub var_increase_se: f64,
    pub d_increase_analytic: f64,
    pub var_increase_analytic: f64,
}

/// Adds `delta` to `W[row, col]` and measures both estimators on common draws.
pub fn perturbation_test(
    spec: &SignalSpec,
    f: &FilterSpec,
    s: &SamplingScheme,
    entry: (usize, usize),
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<PerturbationResult> {
    check_trials(trials)?;
    let bundle = mmse_bundle(spec, f, s)?;
    let (row, col) = entry;
    if row >= bundle.w.nrows() || col >= bundle.w.ncols() {
        return Err(Error::InvalidArgument(format!(
            "entry ({row}, {col}) outside W of size {}x{}",
            bundle.w.nrows(),
            bundle.w.ncols()
        )));
    }
    let mut w_pert = bundle.w.clone();
    w_pert[(row, col)] += delta;
    let a = bundle.observation_matrix();
    let ce_pert = error_covariance_for(&w_pert, &a, &spec.covariance_diagonal(), spec.noise_variance())?;
    let d_pert = 0.5 * ce_pert.trace();
    // Var(d) = Tr(Ce^2) / 2
    let var_opt = 0.5 * bundle.v;
    let var_pert = 0.5 * ce_pert.norm_squared();

    let pipe = Pipeline::new(spec, &bundle);
    let w_pert_rows = row_major(&w_pert);
    let m = s.len();
    let (d_opt, n2) = (bundle.d, a.ncols());
    let acc = accumulate(
        trials,
        seed,
        &[d_pert - d_opt, var_pert - var_opt],
        || (pipe.scratch(), vec![0.0; n2]),
        |(sc, alt), rng, out| {
            pipe.observe(rng, sc);
            pipe.estimate(sc);
            Pipeline::apply(&w_pert_rows, m, &sc.y, alt);
            let d0 = half_sq_dist(&sc.x, &sc.xhat);
            let d1 = half_sq_dist(&sc.x, alt);
            out[0] = d1 - d0;
            out[1] = (d1 - d_pert).powi(2) - (d0 - d_opt).powi(2);
        },
    );
    Ok(PerturbationResult {
        trials,
        d_increase: acc[0].mean(),
        d_increase_se: acc[0].mean_se(),
        var_increase: acc[1].mean(),
        var_increase_se: acc[1].mean_se(),
        d_increase_analytic: d_pert - d_opt,
        var_increase_analytic: var_pert - var_opt,
    })
}

/// One grid point of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemoRow {
    pub t: f64,
    pub signal: f64,
    pub reconstruction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoOutput {
    pub regime: Regime,
    pub distortion: f64,
    pub rows: Vec<DemoRow>,
}

/// Regime whose optimality condition the scheme meets, preferring the half-Landau one.
pub fn detect_regime(spec: &SignalSpec, s: &SamplingScheme) -> Result<Regime> {
    if s.len() <= spec.n() && check_prop4_condition(s, spec).satisfied {
        Ok(Regime::HalfLandau)
    } else if check_thm7_condition(s, spec).satisfied {
        Ok(Regime::AboveLandau)
    } else {
        Err(Error::RegimeMismatch("scheme meets neither closed-form optimality condition".into()))
    }
}

/// One draw reconstructed by the closed-form interpolator on `t_k = k T / (grid_size - 1)`.
pub fn run_reconstruction_demo(spec: &SignalSpec, s: &SamplingScheme, seed: u64, grid_size: usize) -> Result<DemoOutput> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {grid_size}")));
    }
    let regime = detect_regime(spec, s)?;
    let x = sample_coefficients(spec, seed);
    let mut rng = stream_rng(seed, 1);
    let sigma = spec.noise_variance().sqrt();
    let samples = s
        .instants()
        .iter()
        .map(|&t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            evaluate(spec, &x, t).map(|v| v + sigma * z)
        })
        .collect::<Result<Vec<_>>>()?;
    let xhat = interpolate_closed_form(spec, s, &samples, regime)?;
    let t_max = spec.period();
    let rows = (0..grid_size)
        .map(|k| {
            let t = k as f64 * t_max / (grid_size - 1) as f64;
            Ok(DemoRow { t, signal: evaluate(spec, &x, t)?, reconstruction: evaluate(spec, &xhat, t)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DemoOutput { regime, distortion: half_sq_dist(x.values(), xhat.values()), rows })
}
