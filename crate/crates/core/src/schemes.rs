//! Sampling instants: special constructions and optimality tests.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SignalSpec;

/// Minimum circular separation of two instants, relative to the period.
pub const DISTINCT_TOL: f64 = 1e-9;
/// Lattice membership tolerance, relative to the period.
pub const LATTICE_TOL: f64 = 1e-9;
/// Absolute tolerance on the pairwise sine-cosine product.
pub const PRODUCT_TOL: f64 = 1e-9;
/// Exponential-sum tolerance, relative to the number of samples.
pub const EXPSUM_TOL: f64 = 1e-9;
/// Cap on `|K|` for the binary-expansion construction.
pub const BINARY_EXPANSION_CAP: usize = 20;

/// Sorted, pairwise-distinct instants in `[0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct SamplingScheme {
    instants: Vec<f64>,
    period: f64,
}

/// Serializes as the bare array of instants.
impl From<SamplingScheme> for Vec<f64> {
    fn from(s: SamplingScheme) -> Self {
        s.instants
    }
}

impl SamplingScheme {
    /// Reduces every instant mod `period`, sorts, and rejects near-coincident pairs.
    pub fn new(instants: Vec<f64>, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidScheme(format!("period must be positive, got {period}")));
        }
        let mut reduced = Vec::with_capacity(instants.len());
        for t in instants {
            if !t.is_finite() {
                return Err(Error::InvalidScheme(format!("instant {t} is not finite")));
            }
            let mut r = t.rem_euclid(period);
            if r >= period {
                r = 0.0;
            }
            reduced.push(r);
        }
        reduced.sort_by(f64::total_cmp);
        let m = reduced.len();
        for i in 0..m {
            for j in (i + 1)..m {
                if circular_distance(reduced[i], reduced[j], period) <= DISTINCT_TOL * period {
                    return Err(Error::SchemeCollision { first: i, second: j });
                }
            }
        }
        Ok(Self { instants: reduced, period })
    }

    pub fn empty(period: f64) -> Self {
        Self { instants: vec![], period }
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    /// Scheme without the instant at `index`.
    pub fn without(&self, index: usize) -> Self {
        let mut instants = self.instants.clone();
        instants.remove(index);
        Self { instants, period: self.period }
    }

    /// Subset at the given (sorted-order) indices.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let picked = indices
            .iter()
            .map(|&i| {
                self.instants.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("index {i} out of range for {} instants", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(picked, self.period)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m = self.instants.len();
        (0..m).flat_map(move |i| ((i + 1)..m).map(move |j| (self.instants[i], self.instants[j])))
    }
}

pub fn circular_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Which optimality condition a verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionTag {
    Lemma1Pairwise,
    Prop4Product,
    Thm7Expsum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityVerdict {
    pub satisfied: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub condition_tag: ConditionTag,
}

impl OptimalityVerdict {
    fn from_violation(worst_violation: f64, tolerance: f64, condition_tag: ConditionTag) -> Self {
        Self { satisfied: worst_violation <= tolerance, worst_violation, tolerance, condition_tag }
    }
}

/// `{0, T/M, .., (M-1)T/M}`.
pub fn uniform_points(m: usize, period: f64) -> SamplingScheme {
    let instants = (0..m).map(|i| i as f64 * period / m as f64).collect();
    SamplingScheme { instants, period }
}

/// First `M` points of the half-Landau grid `{tau + kT/N}`, reduced mod `T`.
pub fn half_landau_points(m: usize, spec: &SignalSpec, offset_tau: f64) -> Result<SamplingScheme> {
    let n = spec.n();
    if m > n {
        return Err(Error::RateRegime(format!("half-Landau grid needs M <= N, got M={m}, N={n}")));
    }
    let t = spec.period();
    SamplingScheme::new((0..m).map(|k| offset_tau + k as f64 * t / n as f64).collect(), t)
}

/// `M` points of `{kT/N} U {kT/N + T/(2(N1+N2))}` for `N < M <= 2N`, `N | 2N1 - 1`.
///
/// The unshifted grid is taken first, then the shifted one.
pub fn theorem6_points(m: usize, spec: &SignalSpec) -> Result<SamplingScheme> {
    let n = spec.n();
    if m <= n || m > 2 * n {
        return Err(Error::RateRegime(format!("construction needs N < M <= 2N, got M={m}, N={n}")));
    }
    let odd = 2 * spec.n1() - 1;
    if !odd.is_multiple_of(n) {
        return Err(Error::Divisibility { n, value: odd });
    }
    let t = spec.period();
    let shift = t / (2 * (spec.n1() + spec.n2())) as f64;
    let grid = (0..n).map(|k| k as f64 * t / n as f64);
    let instants = grid.clone().chain(grid.map(|g| g + shift)).take(m).collect();
    SamplingScheme::new(instants, t)
}

/// `{0, .., (N-1)T/N} U {T/2N, 3T/2N, .., (2M-2N-1)T/2N}` for `N < M <= 2N`.
pub fn theorem6_upper_points(m: usize, spec: &SignalSpec) -> Result<SamplingScheme> {
    let n = spec.n();
    if m <= n || m > 2 * n {
        return Err(Error::RateRegime(format!("construction needs N < M <= 2N, got M={m}, N={n}")));
    }
    let t = spec.period();
    let grid = (0..n).map(|k| k as f64 * t / n as f64);
    let odd = (0..(m - n)).map(|j| (2 * j + 1) as f64 * t / (2 * n) as f64);
    SamplingScheme::new(grid.chain(odd).collect(), t)
}

/// Exponents `K = {1..N-1} U {2N1..2N2}` whose sums must vanish, ascending and distinct.
pub fn vanishing_exponents(spec: &SignalSpec) -> Vec<usize> {
    let mut ks: Vec<usize> = (1..spec.n()).chain((2 * spec.n1())..=(2 * spec.n2())).collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// `2^|K|` points `t_i = sum_r b_r T / (2 k_r)` indexed by the bits of `i`.
pub fn binary_expansion_points(spec: &SignalSpec) -> Result<SamplingScheme> {
    let ks = vanishing_exponents(spec);
    if ks.len() > BINARY_EXPANSION_CAP {
        return Err(Error::SizeOverflow { size: ks.len(), cap: BINARY_EXPANSION_CAP });
    }
    let t = spec.period();
    let m = 1usize << ks.len();
    let instants = (0..m)
        .map(|i| {
            ks.iter()
                .enumerate()
                .filter(|(r, _)| i >> r & 1 == 1)
                .map(|(_, &k)| t / (2 * k) as f64)
                .sum::<f64>()
        })
        .collect();
    SamplingScheme::new(instants, t)
}

/// Distance from `x` to the nearest integer.
fn frac_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Distance from `x` to the nearest odd integer.
fn odd_distance(x: f64) -> f64 {
    let nearest_odd = 2.0 * ((x - 1.0) / 2.0).round() + 1.0;
    (x - nearest_odd).abs()
}

/// Every pairwise difference on `T/N` multiples or odd multiples of `T/(2(N1+N2))`.
pub fn check_lemma1_conditions(s: &SamplingScheme, spec: &SignalSpec) -> OptimalityVerdict {
    let t = spec.period();
    let grid = t / spec.n() as f64;
    let half_step = t / (2 * (spec.n1() + spec.n2())) as f64;
    let worst = s
        .pairs()
        .map(|(a, b)| {
            let delta = (a - b).abs();
            let on_grid = frac_distance(delta / grid) * grid;
            let on_odd = odd_distance(delta / half_step) * half_step;
            on_grid.min(on_odd)
        })
        .fold(0.0, f64::max);
    OptimalityVerdict::from_violation(worst, LATTICE_TOL * t, ConditionTag::Lemma1Pairwise)
}

/// `max |sin(pi N d / T) cos(pi (N1+N2) d / T)|` over pairwise differences `d`.
pub fn check_prop4_condition(s: &SamplingScheme, spec: &SignalSpec) -> OptimalityVerdict {
    let t = spec.period();
    let n = spec.n() as f64;
    let sum = (spec.n1() + spec.n2()) as f64;
    let worst = s
        .pairs()
        .map(|(a, b)| {
            let x = (a - b).rem_euclid(t) / t;
            ((PI * n * x).sin() * (PI * sum * x).cos()).abs()
        })
        .fold(0.0, f64::max);
    OptimalityVerdict::from_violation(worst, PRODUCT_TOL, ConditionTag::Prop4Product)
}

/// `sum_i exp(j 2 pi k t_i / T)` with the phase reduced mod 1.
pub fn exponential_sum(s: &SamplingScheme, k: usize) -> Complex64 {
    exponential_sum_with_period(s.instants(), k, s.period())
}

fn exponential_sum_with_period(instants: &[f64], k: usize, period: f64) -> Complex64 {
    instants
        .iter()
        .map(|&ti| {
            let turns = (k as f64 * ti / period).rem_euclid(1.0);
            Complex64::from_polar(1.0, 2.0 * PI * turns)
        })
        .sum()
}

/// All exponential sums over `K` vanish to within `1e-9 M`.
pub fn check_thm7_condition(s: &SamplingScheme, spec: &SignalSpec) -> OptimalityVerdict {
    let worst = vanishing_exponents(spec)
        .into_iter()
        .map(|k| exponential_sum_with_period(s.instants(), k, spec.period()).norm())
        .fold(0.0, f64::max);
    OptimalityVerdict::from_violation(worst, EXPSUM_TOL * s.len() as f64, ConditionTag::Thm7Expsum)
}

/// Uniform `M`-point sampling meets the exponential-sum condition: no `k` in `K` is a multiple of `M`.
///
/// Always true once `M > 2 N2`. With `M = 0` all sums are empty, so this is vacuously true.
pub fn uniform_is_thm7_optimal(m: usize, spec: &SignalSpec) -> bool {
    if m == 0 {
        return true;
    }
    vanishing_exponents(spec).into_iter().all(|k| k % m != 0)
}
