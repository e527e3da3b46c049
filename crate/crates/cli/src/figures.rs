//! Fixed-parameter curves behind the published plots.

use std::collections::BTreeSet;

use anyhow::Result;
use clap::ValueEnum;

use samplex::bounds::lemma1_bounds;
use samplex::estimator::avg_distortion;
use samplex::schemes::uniform_points;
use samplex::search::Strategy;
use samplex::{FilterSpec, SignalSpec};

use crate::commands::{m_sweep_csv, t2_sweep_csv};
use crate::output::{to_csv, Cell};

pub const PLOT_SCRIPT_NAME: &str = "plot.py";
pub const PLOT_SCRIPT: &str = include_str!("plot.py");

/// Resolution of the second-instant sweeps.
const T2_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    /// D and V against t2 for (M, N1, N) = (2, 3, 2) and (2, 2, 4).
    Fig3,
    /// D and V against t2 for (M, N1, N) = (2, 2, 1).
    Fig4,
    /// D against M for (N1, N) = (7, 8).
    Fig7,
    /// D against M for (N1, N) = (9, 9).
    Fig8,
    /// Relative gap of uniform over optimal sampling for (N1, N) = (4, 7), M <= N.
    Fig10,
}

fn unit(n1: usize, n: usize) -> Result<SignalSpec> {
    Ok(SignalSpec::uniform(1.0, n1, n, 1.0, 1.0)?)
}

fn all_curves() -> BTreeSet<Strategy> {
    [Strategy::Uniform, Strategy::Bounds, Strategy::Thm6Upper].into()
}

/// `(file name, CSV)` for every curve of the figure, with `T = 1` and `p = sigma = 1`.
pub fn render(id: FigureId) -> Result<Vec<(String, String)>> {
    Ok(match id {
        FigureId::Fig3 => vec![
            ("fig3_n1_3_n_2.csv".into(), t2_sweep_csv(&unit(3, 2)?, 0.0, T2_GRID)?),
            ("fig3_n1_2_n_4.csv".into(), t2_sweep_csv(&unit(2, 4)?, 0.0, T2_GRID)?),
        ],
        FigureId::Fig4 => vec![("fig4_n1_2_n_1.csv".into(), t2_sweep_csv(&unit(2, 1)?, 0.0, T2_GRID)?)],
        FigureId::Fig7 => vec![("fig7_n1_7_n_8.csv".into(), m_sweep_csv(&unit(7, 8)?, 32, &all_curves())?)],
        FigureId::Fig8 => vec![("fig8_n1_9_n_9.csv".into(), m_sweep_csv(&unit(9, 9)?, 36, &all_curves())?)],
        FigureId::Fig10 => vec![("fig10_n1_4_n_7.csv".into(), relative_gap_csv(&unit(4, 7)?)?)],
    })
}

/// `(D_uniform - D_opt) / D_opt` for `M = 1..=N`, where the grid bound is attained.
fn relative_gap_csv(spec: &SignalSpec) -> Result<String> {
    let f = FilterSpec::allpass(spec.n());
    let rows = (1..=spec.n())
        .map(|m| {
            let du = avg_distortion(spec, &f, &uniform_points(m, spec.period()))?;
            let dopt = lemma1_bounds(spec, m)?.0;
            Ok(vec![Cell::Int(m), du.into(), dopt.into(), ((du - dopt) / dopt).into()])
        })
        .collect::<Result<Vec<_>>>()?;
    to_csv(&["M", "uniform", "optimal", "relative_gap"], &rows)
}
