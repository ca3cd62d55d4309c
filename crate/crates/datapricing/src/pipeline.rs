//! Monte Carlo runs of the full equilibrium (mean field, population,
//! summaries) shared by `simulate`, `objectives` and `sweep`.

use datapricing_core::meanfield::MeanFieldPath;
use datapricing_core::numerics::{mean_and_se, trapezoid};
use datapricing_core::population::{simulate_population_with, PopulationPath, SellerStreams};
use datapricing_core::{Equilibrium, Result};

use crate::output::fmt;

/// Mean and standard error across paths.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std_error: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Result<Self> {
        let (mean, std_error) = mean_and_se(values)?;
        Ok(Self { mean, std_error })
    }
}

/// One common-noise path of the equilibrium.
pub struct PathRun {
    pub mf: MeanFieldPath,
    pub pop: PopulationPath,
}

/// Mean path plus the population, storing the first `keep` sellers.
pub fn run_path(eq: &Equilibrium, path: usize, keep: usize) -> Result<PathRun> {
    let noise = eq.common_noise(path as u32);
    let mf = eq.mean_path(&noise)?;
    let pop = simulate_population_with(&eq.params, &eq.scalar, &mf, &noise, keep, SellerStreams::Default)?;
    Ok(PathRun { mf, pop })
}

/// Per-path scalars entering the summary row.
#[derive(Debug, Clone, Copy)]
pub struct PathScalars {
    pub avg_p_bu: f64,
    pub avg_p_br: f64,
    pub avg_tau_bar: f64,
    pub p_bu_0: f64,
    pub p_br_0: f64,
    pub tau_bar_0: f64,
    pub avg_abs_tau: f64,
}

impl PathRun {
    pub fn scalars(&self) -> PathScalars {
        let dt = self.mf.grid.dt();
        let horizon = self.mf.grid.horizon();
        let avg = |v: &[f64]| trapezoid(v, dt) / horizon;
        PathScalars {
            avg_p_bu: avg(&self.mf.p_bu),
            avg_p_br: avg(&self.mf.p_br),
            avg_tau_bar: avg(&self.pop.tau_bar_n),
            p_bu_0: self.mf.p_bu[0],
            p_br_0: self.mf.p_br[0],
            tau_bar_0: self.pop.tau_bar_n[0],
            avg_abs_tau: avg(&self.pop.tau_abs_bar_n),
        }
    }
}

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "avg_p_bu",
    "avg_p_br",
    "avg_tau_bar",
    "p_bu_0",
    "p_br_0",
    "tau_bar_0",
    "avg_abs_tau",
];

/// Monte Carlo summary of one parameter set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Summary {
    pub avg_p_bu: Stat,
    pub avg_p_br: Stat,
    pub avg_tau_bar: Stat,
    pub p_bu_0: Stat,
    pub p_br_0: Stat,
    pub tau_bar_0: Stat,
    pub avg_abs_tau: Stat,
}

impl Summary {
    pub fn from_paths(paths: &[PathScalars]) -> Result<Self> {
        let col = |f: fn(&PathScalars) -> f64| Stat::of(&paths.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            avg_p_bu: col(|s| s.avg_p_bu)?,
            avg_p_br: col(|s| s.avg_p_br)?,
            avg_tau_bar: col(|s| s.avg_tau_bar)?,
            p_bu_0: col(|s| s.p_bu_0)?,
            p_br_0: col(|s| s.p_br_0)?,
            tau_bar_0: col(|s| s.tau_bar_0)?,
            avg_abs_tau: col(|s| s.avg_abs_tau)?,
        })
    }

    pub fn stats(&self) -> [Stat; 7] {
        [
            self.avg_p_bu,
            self.avg_p_br,
            self.avg_tau_bar,
            self.p_bu_0,
            self.p_br_0,
            self.tau_bar_0,
            self.avg_abs_tau,
        ]
    }

    /// `<name>,<name>_se` for every summary column.
    pub fn header() -> Vec<String> {
        SUMMARY_COLUMNS
            .iter()
            .flat_map(|c| [c.to_string(), format!("{c}_se")])
            .collect()
    }

    pub fn row(&self) -> Vec<String> {
        self.stats()
            .iter()
            .flat_map(|s| [fmt(s.mean), fmt(s.std_error)])
            .collect()
    }
}

/// Pointwise Monte Carlo means of the price and effort curves.
pub struct MeanCurves {
    pub p_bu: Vec<Stat>,
    pub p_br: Vec<Stat>,
    pub tau_bar: Vec<Stat>,
}

/// Streaming accumulator for [`MeanCurves`], fed in path order.
pub struct CurveAccumulator {
    p_bu: Vec<Vec<f64>>,
    p_br: Vec<Vec<f64>>,
    tau_bar: Vec<Vec<f64>>,
}

impl CurveAccumulator {
    pub fn new(len: usize) -> Self {
        Self {
            p_bu: vec![Vec::new(); len],
            p_br: vec![Vec::new(); len],
            tau_bar: vec![Vec::new(); len],
        }
    }

    pub fn push(&mut self, run: &PathRun) {
        for k in 0..self.p_bu.len() {
            self.p_bu[k].push(run.mf.p_bu[k]);
            self.p_br[k].push(run.mf.p_br[k]);
            self.tau_bar[k].push(run.pop.tau_bar_n[k]);
        }
    }

    pub fn finish(self) -> Result<MeanCurves> {
        let stats = |v: Vec<Vec<f64>>| v.iter().map(|c| Stat::of(c)).collect::<Result<Vec<_>>>();
        Ok(MeanCurves {
            p_bu: stats(self.p_bu)?,
            p_br: stats(self.p_br)?,
            tau_bar: stats(self.tau_bar)?,
        })
    }
}
