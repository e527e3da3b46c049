//! Exhaustive search over integer sampling instants and one-dimensional sweeps.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{lemma1_bounds, lemma2_bounds, thm6_upper};
use crate::error::{Error, Result};
use crate::estimator::{avg_distortion, mmse_bundle, FilterSpec};
use crate::schemes::{circular_distance, uniform_points, SamplingScheme};
use crate::signal::{stream_rng, DiscreteSignalSpec, SignalSpec};

/// Largest number of subsets an exhaustive search will enumerate.
pub const SEARCH_LIMIT: u128 = 10_000_000;
/// Relative tolerance for reporting co-optimal schemes.
pub const TIE_TOL: f64 = 1e-9;
/// Subsets per parallel work unit.
const SEARCH_CHUNK: u128 = 4096;
/// Sweep points closer than this fraction of `T` to a fixed instant are skipped.
pub const COLLISION_GUARD: f64 = 1e-6;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_subset(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let with_next = binomial(n - next - 1, remaining);
            if rank < with_next {
                break;
            }
            rank -= with_next;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances to the lexicographic successor; false after the last subset.
pub fn next_subset(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_scheme: SamplingScheme,
    pub best_d: f64,
    /// Every scheme within `TIE_TOL` relative of `best_d`, in lexicographic order.
    pub ties: Vec<SamplingScheme>,
    pub candidates: u128,
}

/// Running minimum with the subsets that may still tie with it.
#[derive(Debug, Clone)]
struct Best {
    d: f64,
    subset: Vec<usize>,
    near: Vec<(f64, Vec<usize>)>,
}

impl Best {
    fn empty() -> Self {
        Self { d: f64::INFINITY, subset: vec![], near: vec![] }
    }

    fn offer(&mut self, d: f64, subset: &[usize]) {
        if d < self.d {
            self.d = d;
            self.subset = subset.to_vec();
            let cut = d * (1.0 + TIE_TOL);
            self.near.retain(|(x, _)| *x <= cut);
        }
        if d <= self.d * (1.0 + TIE_TOL) {
            self.near.push((d, subset.to_vec()));
        }
    }

    /// Chunks are merged in enumeration order, so strict `<` keeps the lexicographically first minimizer.
    fn merge(&mut self, other: Best) {
        if other.d < self.d {
            self.d = other.d;
            self.subset = other.subset;
        }
        self.near.extend(other.near);
    }
}

fn to_scheme(subset: &[usize], period: f64) -> Result<SamplingScheme> {
    SamplingScheme::new(subset.iter().map(|&i| i as f64).collect(), period)
}

/// Minimizes `D` over every `M`-subset of `{0, .., T-1}` with an all-pass filter.
pub fn discrete_exhaustive(spec: &DiscreteSignalSpec, m: usize) -> Result<SearchResult> {
    discrete_exhaustive_with(spec, &FilterSpec::allpass(spec.continuous().n()), m)
}

pub fn discrete_exhaustive_with(spec: &DiscreteSignalSpec, f: &FilterSpec, m: usize) -> Result<SearchResult> {
    let t = spec.period();
    let cont = spec.continuous();
    if m == 0 || m > t {
        return Err(Error::InvalidArgument(format!("need 1 <= M <= T, got M={m}, T={t}")));
    }
    if cont.noise_variance() <= 0.0 {
        return Err(Error::NoiseRequired);
    }
    let count = binomial(t, m);
    if count > SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge { t, m, count, limit: SEARCH_LIMIT });
    }
    let period = cont.period();
    let chunks = count.div_ceil(SEARCH_CHUNK);
    let partial: Vec<Result<Best>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * SEARCH_CHUNK;
            let len = SEARCH_CHUNK.min(count - start);
            let mut subset = unrank_subset(t, m, start);
            let mut best = Best::empty();
            for step in 0..len {
                let d = avg_distortion(cont, f, &to_scheme(&subset, period)?)?;
                best.offer(d, &subset);
                if step + 1 < len {
                    next_subset(&mut subset, t);
                }
            }
            Ok(best)
        })
        .collect();
    let mut total = Best::empty();
    for b in partial {
        total.merge(b?);
    }
    let cut = total.d * (1.0 + TIE_TOL);
    let mut tie_sets: Vec<Vec<usize>> =
        total.near.into_iter().filter(|(d, _)| *d <= cut).map(|(_, s)| s).collect();
    tie_sets.sort();
    Ok(SearchResult {
        best_scheme: to_scheme(&total.subset, period)?,
        best_d: total.d,
        ties: tie_sets.iter().map(|s| to_scheme(s, period)).collect::<Result<_>>()?,
        candidates: count,
    })
}

impl SearchResult {
    /// Tie sets as integer index lists.
    pub fn tie_indices(&self) -> BTreeSet<Vec<usize>> {
        self.ties
            .iter()
            .map(|s| s.instants().iter().map(|&x| x.round() as usize).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub checked: usize,
    pub recomputed_best_d: f64,
    /// Smallest `D` among the random candidates.
    pub min_candidate_d: f64,
    pub passed: bool,
}

/// Recomputes the optimum and compares it against `samples` random subsets.
pub fn audit(spec: &DiscreteSignalSpec, result: &SearchResult, samples: usize, seed: u64) -> Result<AuditReport> {
    let cont = spec.continuous();
    let f = FilterSpec::allpass(cont.n());
    let recomputed_best_d = avg_distortion(cont, &f, &result.best_scheme)?;
    let m = result.best_scheme.len();
    let mut rng = stream_rng(seed, 0);
    let mut min_candidate_d = f64::INFINITY;
    for _ in 0..samples {
        let mut idx = sample(&mut rng, spec.period(), m).into_vec();
        idx.sort_unstable();
        let d = avg_distortion(cont, &f, &to_scheme(&idx, cont.period())?)?;
        min_candidate_d = min_candidate_d.min(d);
    }
    let passed = (recomputed_best_d - result.best_d).abs() <= 1e-12 * result.best_d.max(1.0)
        && min_candidate_d >= result.best_d - 1e-12;
    Ok(AuditReport { checked: samples, recomputed_best_d, min_candidate_d, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct T2Row {
    pub t2: f64,
    pub d: f64,
    pub v: f64,
}

/// `D` and `V` of `{t1, t2}` for `t2 = kT/grid_points`, all-pass filter.
pub fn sweep_t2(spec: &SignalSpec, t1_fixed: f64, grid_points: usize) -> Result<Vec<T2Row>> {
    let t = spec.period();
    let f = FilterSpec::allpass(spec.n());
    (1..grid_points)
        .map(|k| k as f64 * t / grid_points as f64)
        .filter(|&t2| circular_distance(t1_fixed, t2, t) >= COLLISION_GUARD * t)
        .map(|t2| {
            let b = mmse_bundle(spec, &f, &SamplingScheme::new(vec![t1_fixed, t2], t)?)?;
            Ok(T2Row { t2, d: b.d, v: b.v })
        })
        .collect()
}

/// Curves available to `sweep_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Uniform,
    Bounds,
    Thm6Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MRow {
    pub m: usize,
    pub d_uniform: Option<f64>,
    pub d_lemma1: Option<f64>,
    pub d_lemma2: Option<f64>,
    pub d_thm6_upper: Option<f64>,
}

/// Per-`M` distortion of uniform sampling and the bounds, `M = 1..=m_max`.
///
/// The upper-bound curve is present only where `N < M <= 2N`.
pub fn sweep_m(spec: &SignalSpec, m_max: usize, strategies: &BTreeSet<Strategy>) -> Result<Vec<MRow>> {
    let f = FilterSpec::allpass(spec.n());
    let n = spec.n();
    (1..=m_max)
        .map(|m| {
            let d_uniform = if strategies.contains(&Strategy::Uniform) {
                Some(avg_distortion(spec, &f, &uniform_points(m, spec.period()))?)
            } else {
                None
            };
            let (d_lemma1, d_lemma2) = if strategies.contains(&Strategy::Bounds) {
                (Some(lemma1_bounds(spec, m)?.0), Some(lemma2_bounds(spec, m)?.0))
            } else {
                (None, None)
            };
            let d_thm6_upper = if strategies.contains(&Strategy::Thm6Upper) && m > n && m <= 2 * n {
                Some(thm6_upper(spec, m)?)
            } else {
                None
            };
            Ok(MRow { m, d_uniform, d_lemma1, d_lemma2, d_thm6_upper })
        })
        .collect()
}
