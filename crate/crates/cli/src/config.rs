//! Experiment description shared by every subcommand.
//!
//! A config file supplies defaults; command-line flags override individual fields.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use samplex::schemes::{
    binary_expansion_points, half_landau_points, theorem6_points, theorem6_upper_points, uniform_points,
};
use samplex::search::Strategy;
use samplex::{FilterConfig, FilterSpec, SamplingScheme, SignalSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub options: Options,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeConfig {
    Points(PointsJson),
    Generator(GeneratorJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsJson {
    pub points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorJson {
    pub generator: Generator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Uniform,
    HalfLandau,
    Thm6,
    Thm6Upper,
    Binary,
}

impl GeneratorJson {
    pub fn build(&self, spec: &SignalSpec) -> Result<SamplingScheme> {
        let m = || self.m.with_context(|| format!("generator {:?} needs m", self.generator));
        Ok(match self.generator {
            Generator::Uniform => uniform_points(m()?, spec.period()),
            Generator::HalfLandau => half_landau_points(self.m.unwrap_or(spec.n()), spec, self.tau.unwrap_or(0.0))?,
            Generator::Thm6 => theorem6_points(m()?, spec)?,
            Generator::Thm6Upper => theorem6_upper_points(m()?, spec)?,
            Generator::Binary => binary_expansion_points(spec)?,
        })
    }
}

impl SchemeConfig {
    pub fn build(&self, spec: &SignalSpec) -> Result<SamplingScheme> {
        match self {
            SchemeConfig::Points(p) => Ok(SamplingScheme::new(p.points.clone(), spec.period())?),
            SchemeConfig::Generator(g) => g.build(spec),
        }
    }
}

/// Command-specific settings; absent fields take each command's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<Strategy>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SignalArgs {
    /// Signal period T.
    #[arg(long)]
    pub period: Option<f64>,
    /// Lowest active harmonic N1.
    #[arg(long)]
    pub n1: Option<usize>,
    /// Highest active harmonic N2.
    #[arg(long, conflicts_with = "n")]
    pub n2: Option<usize>,
    /// Number of active harmonics N = N2 - N1 + 1.
    #[arg(long)]
    pub n: Option<usize>,
    /// Common coefficient variance p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Noise variance sigma^2.
    #[arg(long, conflicts_with = "sigma")]
    pub sigma2: Option<f64>,
    /// Noise standard deviation sigma.
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl SignalArgs {
    fn is_empty(&self) -> bool {
        self.period.is_none()
            && self.n1.is_none()
            && self.n2.is_none()
            && self.n.is_none()
            && self.p.is_none()
            && self.sigma2.is_none()
            && self.sigma.is_none()
    }

    /// Applies the flags on top of `base`.
    pub fn resolve(&self, base: Option<&SignalSpec>) -> Result<SignalSpec> {
        if let (Some(b), true) = (base, self.is_empty()) {
            return Ok(b.clone());
        }
        let n1 = self.n1.or(base.map(|b| b.n1())).context("signal needs --n1 or a config file")?;
        let n2 = match (self.n2, self.n) {
            (Some(n2), _) => n2,
            (None, Some(0)) => bail!("--n must be at least 1"),
            (None, Some(n)) => n1 + n - 1,
            (None, None) => base.map(|b| n1 + b.n() - 1).context("signal needs --n or --n2")?,
        };
        let len = n2.saturating_sub(n1) + 1;
        let variances = match (self.p, base) {
            (Some(p), _) => vec![p; len],
            (None, Some(b)) if b.coeff_variances().len() == len => b.coeff_variances().to_vec(),
            (None, Some(b)) => match b.uniform_variance() {
                Some(p) => vec![p; len],
                None => bail!("band changed but per-harmonic variances do not fit; pass --p"),
            },
            (None, None) => vec![1.0; len],
        };
        let sigma2 = match (self.sigma2, self.sigma) {
            (Some(s2), _) => s2,
            (None, Some(s)) => s * s,
            (None, None) => base.map_or(1.0, |b| b.noise_variance()),
        };
        let period = self.period.or(base.map(|b| b.period())).unwrap_or(1.0);
        Ok(SignalSpec::new(period, n1, n2, variances, sigma2)?)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct FilterArgs {
    /// Filter as JSON: {"allpass":true}, {"gains":[[re,im],..]} or {"lowpass":{"start":l,"width":w}}.
    #[arg(long)]
    pub filter: Option<String>,
}

impl FilterArgs {
    pub fn resolve(&self, base: Option<&FilterConfig>, spec: &SignalSpec) -> Result<FilterSpec> {
        let cfg = match &self.filter {
            Some(text) => serde_json::from_str::<FilterConfig>(text).context("parsing --filter")?,
            None => base.cloned().unwrap_or_default(),
        };
        Ok(cfg.resolve(spec)?)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SchemeArgs {
    /// Comma-separated sampling instants; an empty string means no samples.
    #[arg(long, conflicts_with = "generator", allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Named construction for the sampling instants.
    #[arg(long, value_enum)]
    pub generator: Option<Generator>,
    /// Number of samples for the generator.
    #[arg(long)]
    pub m: Option<usize>,
    /// Offset of the half-Landau grid.
    #[arg(long)]
    pub tau: Option<f64>,
}

pub fn parse_points(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad sampling instant {s:?}")))
        .collect()
}

impl SchemeArgs {
    /// Flags override the config; `--m` and `--tau` alone adjust a configured generator.
    pub fn config(&self, base: Option<&SchemeConfig>) -> Result<Option<SchemeConfig>> {
        if let Some(text) = &self.points {
            return Ok(Some(SchemeConfig::Points(PointsJson { points: parse_points(text)? })));
        }
        if let Some(generator) = self.generator {
            return Ok(Some(SchemeConfig::Generator(GeneratorJson { generator, m: self.m, tau: self.tau })));
        }
        Ok(match base {
            Some(SchemeConfig::Generator(g)) => Some(SchemeConfig::Generator(GeneratorJson {
                generator: g.generator,
                m: self.m.or(g.m),
                tau: self.tau.or(g.tau),
            })),
            other => other.cloned(),
        })
    }

    pub fn resolve(&self, base: Option<&SchemeConfig>, spec: &SignalSpec) -> Result<SamplingScheme> {
        match self.config(base)? {
            Some(cfg) => cfg.build(spec),
            None => bail!("no sampling scheme: pass --points, --generator or a config \"scheme\""),
        }
    }
}
