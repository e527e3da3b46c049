#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use samplex::signal::stream_rng;
use samplex::{FilterSpec, SamplingScheme, SignalSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `sigma^2` log-uniform on `[lo, hi]`.
pub fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + r.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn random_spec(r: &mut ChaCha8Rng, n_max: usize, uniform: bool) -> SignalSpec {
    let n = r.random_range(1..=n_max);
    let n1 = r.random_range(1..=20);
    let period = r.random_range(0.5..3.0);
    let sigma2 = log_uniform(r, 0.05, 5.0);
    let vars = if uniform {
        vec![r.random_range(0.2..2.0); n]
    } else {
        (0..n).map(|_| r.random_range(0.2..2.0)).collect()
    };
    SignalSpec::new(period, n1, n1 + n - 1, vars, sigma2).unwrap()
}

/// Passive gains, with an all-pass filter one time in four.
pub fn random_filter(r: &mut ChaCha8Rng, n: usize) -> FilterSpec {
    if r.random_range(0..4) == 0 {
        return FilterSpec::allpass(n);
    }
    let gains = (0..n)
        .map(|_| {
            let radius = r.random::<f64>().sqrt();
            let angle = r.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(radius, angle)
        })
        .collect();
    FilterSpec::new(gains).unwrap()
}

pub fn random_scheme(r: &mut ChaCha8Rng, m: usize, period: f64) -> SamplingScheme {
    loop {
        let pts = (0..m).map(|_| r.random_range(0.0..period)).collect();
        if let Ok(s) = SamplingScheme::new(pts, period) {
            return s;
        }
    }
}
