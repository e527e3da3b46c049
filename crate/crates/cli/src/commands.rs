use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use samplex::bounds::{regime_report, BoundsReport};
use samplex::compression::{decomposition_check, waterfill_rate_bound, CompressionReport, DecompositionReport};
use samplex::estimator::{diagonal_structure, mmse_bundle, no_sample_moments, Regime};
use samplex::montecarlo::{detect_regime, perturbation_test, run_reconstruction_demo, run_sim, PerturbationResult, SimResult};
use samplex::schemes::{check_lemma1_conditions, check_prop4_condition, check_thm7_condition, OptimalityVerdict};
use samplex::search::{audit, discrete_exhaustive, sweep_m, sweep_t2, AuditReport, Strategy};
use samplex::{DiscreteSignalSpec, Error, FilterSpec, SamplingScheme, SignalSpec};

use crate::config::{ExperimentConfig, FilterArgs, Options, SchemeArgs, SignalArgs};
use crate::figures::{self, FigureId};
use crate::output::{to_csv, to_json, write_file, Cell};

const DEFAULT_TRIALS: usize = 100_000;

/// Global flags plus the optional config file.
pub struct Ctx {
    pub config: Option<ExperimentConfig>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Ctx {
    fn signal(&self, args: &SignalArgs) -> Result<SignalSpec> {
        args.resolve(self.config.as_ref().map(|c| &c.signal))
    }

    /// Signal for commands that run the MMSE estimator.
    fn noisy_signal(&self, args: &SignalArgs) -> Result<SignalSpec> {
        let spec = self.signal(args)?;
        if spec.noise_variance() <= 0.0 {
            return Err(Error::NoiseRequired).context("sigma2 = 0 makes the estimator singular; set sigma2 > 0");
        }
        Ok(spec)
    }

    fn filter(&self, args: &FilterArgs, spec: &SignalSpec) -> Result<FilterSpec> {
        args.resolve(self.config.as_ref().map(|c| &c.filter), spec)
    }

    fn scheme(&self, args: &SchemeArgs, spec: &SignalSpec) -> Result<SamplingScheme> {
        args.resolve(self.config.as_ref().and_then(|c| c.scheme.as_ref()), spec)
    }

    fn seed(&self) -> u64 {
        self.seed.or(self.config.as_ref().and_then(|c| c.seed)).unwrap_or(0)
    }

    fn options(&self) -> Options {
        self.config.as_ref().map(|c| c.options.clone()).unwrap_or_default()
    }

    /// Prints `value` and, with `--out`, also writes `<name>.json`.
    fn emit<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = to_json(value)?;
        if let Some(dir) = &self.out {
            write_file(dir, &format!("{name}.json"), &text)?;
        }
        print!("{text}");
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct DistortionArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct DistortionOut {
    D: f64,
    V: f64,
    Pi_diagonal: bool,
    Gamma_diagonal: bool,
}

pub fn distortion(ctx: &Ctx, a: &DistortionArgs) -> Result<()> {
    let spec = ctx.noisy_signal(&a.signal)?;
    let f = ctx.filter(&a.filter, &spec)?;
    let s = ctx.scheme(&a.scheme, &spec)?;
    let (pi_diag, gamma_diag) = diagonal_structure(&spec, &f, &s)?;
    let (d, v) = if s.is_empty() {
        no_sample_moments(&spec)
    } else {
        let b = mmse_bundle(&spec, &f, &s)?;
        (b.d, b.v)
    };
    ctx.emit("distortion", &DistortionOut { D: d, V: v, Pi_diagonal: pi_diag, Gamma_diagonal: gamma_diag })
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
}

pub fn bounds(ctx: &Ctx, a: &BoundsArgs) -> Result<()> {
    let spec = ctx.noisy_signal(&a.signal)?;
    let explicit = a.scheme.points.is_some() || a.scheme.generator.is_some();
    let m = match a.scheme.m {
        Some(m) if !explicit => m,
        _ => ctx.scheme(&a.scheme, &spec).context("bounds need --m or a scheme")?.len(),
    };
    let report: BoundsReport = regime_report(&spec, m)?;
    ctx.emit("bounds", &report)
}

#[derive(Debug, Args)]
pub struct PointsArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
}

#[derive(Serialize)]
struct Verdicts {
    lemma1: OptimalityVerdict,
    prop4: OptimalityVerdict,
    thm7: OptimalityVerdict,
}

fn verdicts(s: &SamplingScheme, spec: &SignalSpec) -> Verdicts {
    Verdicts {
        lemma1: check_lemma1_conditions(s, spec),
        prop4: check_prop4_condition(s, spec),
        thm7: check_thm7_condition(s, spec),
    }
}

#[derive(Serialize)]
struct PointsOut {
    m: usize,
    scheme: SamplingScheme,
    verdicts: Verdicts,
}

pub fn points(ctx: &Ctx, a: &PointsArgs) -> Result<()> {
    let spec = ctx.signal(&a.signal)?;
    let s = ctx.scheme(&a.scheme, &spec)?;
    ctx.emit("points", &PointsOut { m: s.len(), verdicts: verdicts(&s, &spec), scheme: s })
}

#[derive(Serialize)]
struct CheckOut {
    m: usize,
    verdicts: Verdicts,
    /// Closed-form interpolation regime the scheme qualifies for.
    regime: Option<Regime>,
}

pub fn check(ctx: &Ctx, a: &PointsArgs) -> Result<()> {
    let spec = ctx.signal(&a.signal)?;
    let s = ctx.scheme(&a.scheme, &spec)?;
    let regime = if s.is_empty() { None } else { detect_regime(&spec, &s).ok() };
    ctx.emit("check", &CheckOut { m: s.len(), verdicts: verdicts(&s, &spec), regime })
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Also compare against W with entry ROW,COL shifted by --delta.
    #[arg(long, value_name = "ROW,COL")]
    perturb: Option<String>,
    /// Shift applied with --perturb.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Also reconstruct one draw on a grid of this many points.
    #[arg(long, value_name = "GRID")]
    demo: Option<usize>,
}

#[derive(Serialize)]
struct SimOut {
    #[serde(flatten)]
    sim: SimResult,
    mean_z: f64,
    variance_z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturbation: Option<PerturbationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    demo: Option<serde_json::Value>,
}

fn parse_entry(text: &str) -> Result<(usize, usize)> {
    let (r, c) = text.split_once(',').context("--perturb expects ROW,COL")?;
    Ok((r.trim().parse()?, c.trim().parse()?))
}

pub fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let spec = ctx.noisy_signal(&a.signal)?;
    let f = ctx.filter(&a.filter, &spec)?;
    let s = ctx.scheme(&a.scheme, &spec)?;
    let trials = a.trials.or(ctx.options().trials).unwrap_or(DEFAULT_TRIALS);
    let seed = ctx.seed();
    let sim = run_sim(&spec, &f, &s, trials, seed)?;
    let perturbation = match &a.perturb {
        Some(text) => Some(perturbation_test(&spec, &f, &s, parse_entry(text)?, a.delta, trials, seed)?),
        None => None,
    };
    let demo = match a.demo {
        Some(grid) => {
            let d = run_reconstruction_demo(&spec, &s, seed, grid)?;
            let rows: Vec<Vec<Cell>> =
                d.rows.iter().map(|r| vec![r.t.into(), r.signal.into(), r.reconstruction.into()]).collect();
            let mut v = serde_json::json!({ "regime": d.regime, "distortion": d.distortion });
            match &ctx.out {
                Some(dir) => write_file(dir, "demo.csv", &to_csv(&["t", "signal", "reconstruction"], &rows)?)?,
                None => v["rows"] = serde_json::to_value(&d.rows)?,
            }
            Some(v)
        }
        None => None,
    };
    let out = SimOut { mean_z: sim.mean_z(), variance_z: sim.variance_z(), sim, perturbation, demo };
    ctx.emit("simulate", &out)
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    signal: SignalArgs,
    /// Number of samples on the integer grid.
    #[arg(long)]
    m: usize,
    /// Random subsets drawn to cross-check the optimum.
    #[arg(long, default_value_t = 0)]
    audit: usize,
}

#[derive(Serialize)]
struct SearchOut {
    best_scheme: SamplingScheme,
    best_d: f64,
    ties: Vec<SamplingScheme>,
    candidates: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<AuditReport>,
}

pub fn search_discrete(ctx: &Ctx, a: &SearchArgs) -> Result<()> {
    let spec = DiscreteSignalSpec::new(ctx.noisy_signal(&a.signal)?)?;
    let r = discrete_exhaustive(&spec, a.m)?;
    let audit = if a.audit > 0 { Some(audit(&spec, &r, a.audit, ctx.seed())?) } else { None };
    ctx.emit(
        "search-discrete",
        &SearchOut { best_scheme: r.best_scheme, best_d: r.best_d, ties: r.ties, candidates: r.candidates, audit },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Distortion against the number of samples.
    M,
    /// Distortion of a two-sample scheme against its second instant.
    T2,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[arg(long, value_enum, default_value_t = SweepKind::M)]
    kind: SweepKind,
    /// Largest M (default 4N).
    #[arg(long)]
    m_max: Option<usize>,
    /// Curves for the M sweep (default all).
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    /// Fixed first instant for the t2 sweep.
    #[arg(long)]
    t1: Option<f64>,
    /// Grid resolution for the t2 sweep.
    #[arg(long)]
    grid_points: Option<usize>,
}

fn parse_strategies(names: &[String]) -> Result<BTreeSet<Strategy>> {
    names
        .iter()
        .map(|n| serde_json::from_value(serde_json::Value::String(n.trim().to_string())).with_context(|| format!("unknown strategy {n:?}")))
        .collect()
}

pub fn m_sweep_csv(spec: &SignalSpec, m_max: usize, strategies: &BTreeSet<Strategy>) -> Result<String> {
    let rows = sweep_m(spec, m_max, strategies)?;
    let mut header = vec!["M"];
    if strategies.contains(&Strategy::Uniform) {
        header.push("uniform");
    }
    if strategies.contains(&Strategy::Bounds) {
        header.extend(["lemma1", "lemma2", "union_lower"]);
    }
    if strategies.contains(&Strategy::Thm6Upper) {
        header.push("thm6_upper");
    }
    let cells = rows
        .iter()
        .map(|r| {
            let mut row = vec![Cell::Int(r.m)];
            if strategies.contains(&Strategy::Uniform) {
                row.push(r.d_uniform.into());
            }
            if strategies.contains(&Strategy::Bounds) {
                let union = r.d_lemma1.zip(r.d_lemma2).map(|(a, b)| a.max(b));
                row.extend::<[Cell; 3]>([r.d_lemma1.into(), r.d_lemma2.into(), union.into()]);
            }
            if strategies.contains(&Strategy::Thm6Upper) {
                row.push(r.d_thm6_upper.into());
            }
            row
        })
        .collect::<Vec<_>>();
    to_csv(&header, &cells)
}

pub fn t2_sweep_csv(spec: &SignalSpec, t1: f64, grid_points: usize) -> Result<String> {
    let rows = sweep_t2(spec, t1, grid_points)?;
    let cells: Vec<Vec<Cell>> = rows.iter().map(|r| vec![r.t2.into(), r.d.into(), r.v.into()]).collect();
    to_csv(&["t2", "D", "V"], &cells)
}

pub fn sweep(ctx: &Ctx, a: &SweepArgs) -> Result<()> {
    let spec = ctx.noisy_signal(&a.signal)?;
    let opts = ctx.options();
    let (name, csv) = match a.kind {
        SweepKind::M => {
            let m_max = a.m_max.or(opts.m_max).unwrap_or(4 * spec.n());
            let strategies = match (&a.strategies, opts.strategies) {
                (Some(names), _) => parse_strategies(names)?,
                (None, Some(list)) => list.into_iter().collect(),
                (None, None) => [Strategy::Uniform, Strategy::Bounds, Strategy::Thm6Upper].into(),
            };
            if strategies.is_empty() {
                bail!("no strategies selected");
            }
            ("sweep_m.csv", m_sweep_csv(&spec, m_max, &strategies)?)
        }
        SweepKind::T2 => {
            let t1 = a.t1.or(opts.t1).unwrap_or(0.0);
            let grid = a.grid_points.or(opts.grid_points).unwrap_or(200);
            ("sweep_t2.csv", t2_sweep_csv(&spec, t1, grid)?)
        }
    };
    match &ctx.out {
        Some(dir) => write_file(dir, name, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    signal: SignalArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Compression distortion target for the rate bound.
    #[arg(long)]
    dc_target: Option<f64>,
    /// Quantizer step for the decomposition check.
    #[arg(long)]
    delta: Option<f64>,
    /// Monte Carlo trials for the decomposition check.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Serialize)]
struct CompressOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<CompressionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<DecompositionOut>,
}

#[derive(Serialize)]
struct DecompositionOut {
    #[serde(flatten)]
    report: DecompositionReport,
    residual_z: f64,
}

pub fn compress(ctx: &Ctx, a: &CompressArgs) -> Result<()> {
    let spec = ctx.noisy_signal(&a.signal)?;
    let f = ctx.filter(&a.filter, &spec)?;
    let s = ctx.scheme(&a.scheme, &spec)?;
    let opts = ctx.options();
    let dc_target = a.dc_target.or(opts.dc_target);
    let delta = a.delta.or(opts.delta);
    if dc_target.is_none() && delta.is_none() {
        bail!("compress needs --dc-target, --delta or both");
    }
    let rate = dc_target.map(|dc| waterfill_rate_bound(&spec, &f, &s, dc)).transpose()?;
    let decomposition = match delta {
        Some(delta) => {
            let trials = a.trials.or(opts.trials).unwrap_or(DEFAULT_TRIALS);
            let report = decomposition_check(&spec, &f, &s, delta, trials, ctx.seed())?;
            Some(DecompositionOut { residual_z: report.residual_z(), report })
        }
        None => None,
    };
    ctx.emit("compress", &CompressOut { rate, decomposition })
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Figures to regenerate.
    #[arg(value_enum, required = true)]
    ids: Vec<FigureId>,
}

pub fn figures(ctx: &Ctx, a: &FiguresArgs) -> Result<()> {
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
    let mut written = Vec::new();
    for &id in &a.ids {
        for (name, csv) in figures::render(id)? {
            write_file(&dir, &name, &csv)?;
            written.push(name);
        }
    }
    write_file(&dir, figures::PLOT_SCRIPT_NAME, figures::PLOT_SCRIPT)?;
    written.push(figures::PLOT_SCRIPT_NAME.to_string());
    print!("{}", to_json(&serde_json::json!({ "dir": dir, "files": written }))?);
    Ok(())
}
