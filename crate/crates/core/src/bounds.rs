//! Closed-form bounds on the optimal average distortion and its variance.
//!
//! Every formula depends on `(spec, M)` only. SNR is always `N p / sigma^2`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schemes::uniform_is_thm7_optimal;
use crate::signal::SignalSpec;

/// Uniform variance and SNR; both bounds need `sigma^2 > 0`.
fn p_and_snr(spec: &SignalSpec) -> Result<(f64, f64)> {
    let p = spec.require_uniform()?;
    if spec.noise_variance() <= 0.0 {
        return Err(Error::NoiseRequired);
    }
    Ok((p, spec.snr()?))
}

/// `D >= (p/2)(2N - M + M/(1+SNR))`, `V >= p^2 (2N - M + M/(1+SNR)^2)`.
///
/// Stated for every `M`; the expressions go negative once `M` is far above `2N`.
pub fn lemma1_bounds(spec: &SignalSpec, m: usize) -> Result<(f64, f64)> {
    let (p, snr) = p_and_snr(spec)?;
    let (n2, m) = ((2 * spec.n()) as f64, m as f64);
    let d = 0.5 * p * (n2 - m + m / (1.0 + snr));
    let v = p * p * (n2 - m + m / (1.0 + snr).powi(2));
    Ok((d, v))
}

/// `D >= N p / (1 + (M/2N) SNR)`, `V >= 2 N p^2 / (1 + (M/2N) SNR)^2`.
pub fn lemma2_bounds(spec: &SignalSpec, m: usize) -> Result<(f64, f64)> {
    let (p, snr) = p_and_snr(spec)?;
    let n = spec.n() as f64;
    let g = 1.0 + m as f64 / (2.0 * n) * snr;
    Ok((n * p / g, 2.0 * n * p * p / (g * g)))
}

/// `r = a mod b`: `b - 1` if `r = 0`, `2b - 2r + 1` if `2r > b`, else `2r - 1`.
pub fn f_combinatorial(a: usize, b: usize) -> usize {
    assert!(a >= 1 && b >= 1, "f_combinatorial needs a, b >= 1");
    let r = a % b;
    if r == 0 {
        b - 1
    } else if 2 * r > b {
        2 * b - 2 * r + 1
    } else {
        2 * r - 1
    }
}

/// Distortion achieved by the grid-plus-odd-points construction, `N < M <= 2N`.
pub fn thm6_upper(spec: &SignalSpec, m: usize) -> Result<f64> {
    let n = spec.n();
    if m <= n || m > 2 * n {
        return Err(Error::RateRegime(format!("upper bound needs N < M <= 2N, got M={m}, N={n}")));
    }
    let (p, snr) = p_and_snr(spec)?;
    let num = f_combinatorial(spec.n1(), n).min(m - n) as f64;
    let gap = (2 * n - m) as f64;
    let extra = (m - n) as f64;
    Ok(p * (0.5 * gap
        + gap / (2.0 * (1.0 + snr))
        + num * (1.0 + snr) / (1.0 + 2.0 * snr)
        + (extra - num) / (1.0 + snr)))
}

/// `(D_H2, D_H1_lb)` for uniform sampling behind the two half-band filters, `M` even and `M <= N`.
pub fn thm5_formulas(spec: &SignalSpec, m: usize) -> Result<(f64, f64)> {
    let n = spec.n();
    if m < 2 || !m.is_multiple_of(2) || m > n {
        return Err(Error::RateRegime(format!("needs even M with 2 <= M <= N, got M={m}, N={n}")));
    }
    let (p, snr) = p_and_snr(spec)?;
    let (nf, mf) = (n as f64, m as f64);
    let form = |gain: f64| 0.5 * p * (2.0 * nf - mf + mf / (1.0 + gain * snr));
    Ok((form(mf / nf), form(mf / (2.0 * nf))))
}

/// `sum_l 1 / (1/p_l + M / (2 sigma^2))` for per-harmonic variances.
pub fn sparse_lower(spec: &SignalSpec, m: usize) -> Result<f64> {
    let s2 = spec.noise_variance();
    if s2 <= 0.0 {
        return Err(Error::NoiseRequired);
    }
    let k = m as f64 / (2.0 * s2);
    Ok(spec.coeff_variances().iter().map(|p| 1.0 / (1.0 / p + k)).sum())
}

/// All bounds for one `(spec, M)` plus the regimes in which they are attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub m: usize,
    pub snr: f64,
    pub lemma1_d: f64,
    pub lemma1_v: f64,
    pub lemma2_d: f64,
    pub lemma2_v: f64,
    pub thm6_upper_d: Option<f64>,
    pub sparse_lower_d: Option<f64>,
    pub tight_flags: BTreeMap<String, bool>,
}

impl BoundsReport {
    pub fn best_lower_d(&self) -> f64 {
        self.lemma1_d.max(self.lemma2_d)
    }

    pub fn best_lower_v(&self) -> f64 {
        self.lemma1_v.max(self.lemma2_v)
    }
}

/// The first bound is attained for `M <= N`, or for `M <= 2N` when `N | 2N1 - 1`.
pub fn lemma1_tight(spec: &SignalSpec, m: usize) -> bool {
    let n = spec.n();
    m <= n || (m <= 2 * n && (2 * spec.n1() - 1).is_multiple_of(n))
}

pub fn regime_report(spec: &SignalSpec, m: usize) -> Result<BoundsReport> {
    let (lemma1_d, lemma1_v) = lemma1_bounds(spec, m)?;
    let (lemma2_d, lemma2_v) = lemma2_bounds(spec, m)?;
    let n = spec.n();
    let thm6_upper_d = if m > n && m <= 2 * n { Some(thm6_upper(spec, m)?) } else { None };
    let mut tight_flags = BTreeMap::new();
    tight_flags.insert("lemma1".to_string(), lemma1_tight(spec, m));
    tight_flags.insert("lemma2".to_string(), m > 0 && uniform_is_thm7_optimal(m, spec));
    Ok(BoundsReport {
        m,
        snr: spec.snr()?,
        lemma1_d,
        lemma1_v,
        lemma2_d,
        lemma2_v,
        thm6_upper_d,
        sparse_lower_d: Some(sparse_lower(spec, m)?),
        tight_flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n1: usize, n: usize, p: f64, s2: f64) -> SignalSpec {
        SignalSpec::uniform(1.0, n1, n, p, s2).unwrap()
    }

    #[test]
    fn lemma1_examples() {
        let sp = spec(4, 7, 1.0, 0.01);
        let (d, _) = lemma1_bounds(&sp, 13).unwrap();
        assert!((d - 0.50927).abs() < 5e-6, "{d}");
        let (d0, v0) = lemma1_bounds(&spec(2, 3, 1.5, 1.0), 0).unwrap();
        assert!((d0 - 4.5).abs() < 1e-15 && (v0 - 13.5).abs() < 1e-12);
        let (dinf, _) = lemma1_bounds(&spec(2, 3, 1.0, 1e-12), 4).unwrap();
        assert!((dinf - 1.0).abs() < 1e-9);
        let sparse = SignalSpec::new(1.0, 1, 2, vec![1.0, 2.0], 1.0).unwrap();
        assert_eq!(lemma1_bounds(&sparse, 1), Err(Error::UniformVarianceRequired));
    }

    #[test]
    fn lemma2_examples() {
        let (d, v) = lemma2_bounds(&spec(1, 1, 1.0, 1.0), 2).unwrap();
        assert!((d - 0.5).abs() < 1e-15 && (v - 0.5).abs() < 1e-15);
        let (d0, _) = lemma2_bounds(&spec(3, 4, 2.0, 1.0), 0).unwrap();
        assert!((d0 - 8.0).abs() < 1e-15);
        let sp = spec(7, 8, 1.0, 1.0);
        assert!(lemma2_bounds(&sp, 40).unwrap().0 > lemma1_bounds(&sp, 40).unwrap().0);
        assert!(lemma2_bounds(&sp, 4).unwrap().0 < lemma1_bounds(&sp, 4).unwrap().0);
    }

    #[test]
    fn f_cases() {
        assert_eq!(f_combinatorial(7, 7), 6);
        assert_eq!(f_combinatorial(4, 7), 7);
        assert_eq!(f_combinatorial(1, 4), 1);
        assert_eq!(f_combinatorial(7, 8), 3);
    }

    #[test]
    fn thm6_upper_examples() {
        let sp = spec(7, 8, 1.0, 1.0);
        assert!(thm6_upper(&sp, 8).is_err());
        assert!(thm6_upper(&sp, 17).is_err());
        let snr = 8.0;
        let expected = 0.5 * 4.0 + 4.0 / (2.0 * (1.0 + snr)) + 3.0 * (1.0 + snr) / (1.0 + 2.0 * snr) + 1.0 / (1.0 + snr);
        assert!((thm6_upper(&sp, 12).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn thm5_examples() {
        let sp = spec(3, 8, 1.0, 0.5);
        let (h2, h1) = thm5_formulas(&sp, 4).unwrap();
        assert!(h2 < h1);
        assert!(thm5_formulas(&sp, 3).is_err());
        assert!(thm5_formulas(&sp, 10).is_err());
        // doubling SNR in the H1 form reproduces the H2 value
        let (_, h1_at_2snr) = thm5_formulas(&spec(3, 8, 1.0, 0.25), 4).unwrap();
        assert!((h2 - h1_at_2snr).abs() < 1e-12);
    }

    #[test]
    fn sparse_examples() {
        let sp = spec(2, 5, 0.8, 0.3);
        for m in [0, 3, 11, 40] {
            let a = sparse_lower(&sp, m).unwrap();
            let b = lemma2_bounds(&sp, m).unwrap().0;
            assert!((a - b).abs() < 1e-12 * b);
        }
        let tiny = SignalSpec::new(1.0, 1, 2, vec![1e-300, 1.0], 1.0).unwrap();
        let full = SignalSpec::new(1.0, 2, 2, vec![1.0], 1.0).unwrap();
        assert!((sparse_lower(&tiny, 5).unwrap() - sparse_lower(&full, 5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn report_flags() {
        let r = regime_report(&spec(4, 7, 1.0, 0.01), 13).unwrap();
        assert!(r.tight_flags["lemma1"]);
        assert!(r.thm6_upper_d.is_some());
        let r = regime_report(&spec(7, 8, 1.0, 1.0), 29).unwrap();
        assert!(r.tight_flags["lemma2"]);
        assert!(!r.tight_flags["lemma1"]);
        for m in 0..=5 {
            assert!(regime_report(&spec(2, 5, 1.0, 1.0), m).unwrap().tight_flags["lemma1"]);
        }
    }
}
