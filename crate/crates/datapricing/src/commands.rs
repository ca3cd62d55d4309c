//! Subcommand implementations. Each writes its files through an
//! [`OutputSink`]; the caller adds the manifest.

use datapricing_core::objectives::{aggregate, broker_payoff, follower_payoff, leader_payoff, FunctionalId};
use datapricing_core::params::validate;
use datapricing_core::riccati::solvability_check;
use datapricing_core::verification::{
    consistency_gap, nash_gap, smooth_direction, stationarity_check, Deviation, Role, ScalingReport,
};
use datapricing_core::{Equilibrium, Executor, MarketParams};
use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::output::{fmt, OutputSink};
use crate::pipeline::{run_path, CurveAccumulator, PathScalars, Stat, Summary};
use crate::report::{trend, EstimateView, PayoffView, ScalingView, StationarityView, ValidationView};

/// Paths processed per parallel batch by the file-writing subcommands.
const BATCH: usize = 64;

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Fails with exit code 1 if the model invariants do not hold.
pub fn gate(params: &MarketParams) -> Result<(), CliError> {
    let report = validate(params);
    if report.passed() {
        return Ok(());
    }
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("{}: {}", c.name, c.message))
        .collect();
    Err(CliError::Validation(failed.join("; ")))
}

pub fn validate_cmd(cfg: &ResolvedConfig, sink: &mut OutputSink) -> Result<bool, CliError> {
    let report = validate(&cfg.params);
    sink.json("validation.json", &ValidationView::from(&report))?;
    Ok(report.passed())
}

#[derive(Serialize)]
struct SolvabilityView {
    min_det_f: f64,
    argmin_det_f: f64,
    min_det_g: f64,
    argmin_det_g: f64,
    max_residual_f: f64,
    max_residual_g: f64,
    max_condition_f: f64,
    max_condition_g: f64,
    delta1_plus: f64,
    delta1_minus: f64,
    delta2_plus: f64,
    delta2_minus: f64,
}

pub fn solve_cmd(cfg: &ResolvedConfig, sink: &mut OutputSink) -> Result<(), CliError> {
    let eq = Equilibrium::solve(&cfg.params, &cfg.controls)?;
    let solv = solvability_check(&cfg.params, &eq.grid)?;
    let m = &eq.matrix;
    let mut header = strings(&["t", "xi", "vartheta", "phi"]);
    for i in 1..=2 {
        for j in 1..=2 {
            header.push(format!("f_{i}{j}"));
        }
    }
    for i in 1..=4 {
        for j in 1..=4 {
            header.push(format!("g_{i}{j}"));
        }
    }
    header.extend(strings(&["det_f", "det_g"]));
    let rows = (0..eq.grid.len()).map(|k| {
        let mut row = vec![
            fmt(eq.grid.t(k)),
            fmt(eq.scalar.xi[k]),
            fmt(eq.scalar.vartheta[k]),
            fmt(eq.scalar.phi[k]),
        ];
        for i in 0..2 {
            for j in 0..2 {
                row.push(fmt(m.f[k][(i, j)]));
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                row.push(fmt(m.g[k][(i, j)]));
            }
        }
        row.push(fmt(m.det_f[k]));
        row.push(fmt(m.det_g[k]));
        row
    });
    sink.csv("riccati.csv", &header, rows)?;
    let (res_f, res_g) = m.residuals(&eq.coeffs);
    let r = eq.scalar.roots;
    sink.json(
        "solvability.json",
        &SolvabilityView {
            min_det_f: solv.min_det_f,
            argmin_det_f: solv.argmin_f,
            min_det_g: solv.min_det_g,
            argmin_det_g: solv.argmin_g,
            max_residual_f: res_f,
            max_residual_g: res_g,
            max_condition_f: m.max_cond_f,
            max_condition_g: m.max_cond_g,
            delta1_plus: r.delta1_plus,
            delta1_minus: r.delta1_minus,
            delta2_plus: r.delta2_plus,
            delta2_minus: r.delta2_minus,
        },
    )?;
    Ok(())
}

/// Runs every path, optionally writing per-path files, and returns the
/// summary and mean curves.
fn monte_carlo<E: Executor>(
    eq: &Equilibrium,
    exec: &E,
    mut files: Option<(&mut OutputSink, Option<usize>)>,
) -> Result<(Summary, crate::pipeline::MeanCurves), CliError> {
    let n_paths = eq.controls.n_paths;
    let seed = eq.controls.seed;
    let keep = files.as_ref().and_then(|(_, k)| *k).unwrap_or(0);
    let write = files.is_some();
    let mut scalars: Vec<PathScalars> = Vec::with_capacity(n_paths);
    let mut curves = CurveAccumulator::new(eq.grid.len());
    let mut start = 0;
    while start < n_paths {
        let count = BATCH.min(n_paths - start);
        let batch = exec.map_indexed(count, |i| {
            let path = start + i;
            let run = run_path(eq, path, keep)?;
            let mean_rows: Vec<Vec<String>> = if write {
                (0..eq.grid.len())
                    .map(|k| {
                        let x = run.mf.x[k];
                        vec![
                            fmt(eq.grid.t(k)),
                            fmt(x[0]),
                            fmt(x[1]),
                            fmt(x[2]),
                            fmt(x[3]),
                            fmt(run.mf.p_bu[k]),
                            fmt(run.mf.p_br[k]),
                            fmt(run.mf.zeta[k]),
                            fmt(run.mf.m_star[k]),
                        ]
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let pop_rows: Vec<Vec<String>> = if keep > 0 {
                let len = eq.grid.len();
                (0..len)
                    .map(|k| {
                        let mut row = Vec::with_capacity(2 * keep + 2);
                        row.push(fmt(eq.grid.t(k)));
                        row.extend((0..keep).map(|i| fmt(run.pop.q[i * len + k])));
                        row.extend((0..keep).map(|i| fmt(run.pop.tau[i * len + k])));
                        row.push(fmt(run.pop.q_bar_n[k]));
                        row
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Ok::<_, datapricing_core::Error>((run, mean_rows, pop_rows))
        });
        for (i, item) in batch.into_iter().enumerate() {
            let (run, mean_rows, pop_rows) = item?;
            let path = start + i;
            scalars.push(run.scalars());
            curves.push(&run);
            if let Some((sink, _)) = files.as_mut() {
                let header = strings(&["t", "Qbar", "Vbar", "Kbar", "Lbar", "p_bu", "p_br", "zeta", "m_star"]);
                sink.csv(&format!("mean_path_seed{seed}_path{path:04}.csv"), &header, mean_rows)?;
                if keep > 0 {
                    let mut header = vec!["t".to_string()];
                    header.extend((1..=keep).map(|i| format!("Q_{i}")));
                    header.extend((1..=keep).map(|i| format!("tau_{i}")));
                    header.push("Q_bar_n".into());
                    sink.csv(&format!("population_seed{seed}_path{path:04}.csv"), &header, pop_rows)?;
                }
            }
        }
        start += count;
    }
    Ok((Summary::from_paths(&scalars)?, curves.finish()?))
}

fn write_curves(
    sink: &mut OutputSink,
    name: &str,
    eq: &Equilibrium,
    curves: &crate::pipeline::MeanCurves,
) -> Result<(), CliError> {
    let header = strings(&[
        "t",
        "p_bu_mean",
        "p_bu_se",
        "p_br_mean",
        "p_br_se",
        "tau_bar_mean",
        "tau_bar_se",
    ]);
    let rows = (0..eq.grid.len()).map(|k| {
        let cell = |s: &Stat| [fmt(s.mean), fmt(s.std_error)];
        let mut row = vec![fmt(eq.grid.t(k))];
        row.extend(cell(&curves.p_bu[k]));
        row.extend(cell(&curves.p_br[k]));
        row.extend(cell(&curves.tau_bar[k]));
        row
    });
    sink.csv(name, &header, rows)?;
    Ok(())
}

pub fn simulate_cmd<E: Executor>(
    cfg: &ResolvedConfig,
    exec: &E,
    sink: &mut OutputSink,
    population: bool,
    sellers: Option<usize>,
) -> Result<(), CliError> {
    let eq = Equilibrium::solve(&cfg.params, &cfg.controls)?;
    let keep = population.then(|| sellers.unwrap_or(cfg.params.n).min(cfg.params.n));
    let (summary, curves) = monte_carlo(&eq, exec, Some((sink, keep)))?;
    write_curves(sink, "means.csv", &eq, &curves)?;
    sink.csv("summary.csv", &Summary::header(), [summary.row()])?;
    Ok(())
}

#[derive(Serialize)]
struct ObjectivesView {
    follower: Vec<PayoffView>,
    broker: PayoffView,
    leader: PayoffView,
}

pub fn objectives_cmd<E: Executor>(cfg: &ResolvedConfig, exec: &E, sink: &mut OutputSink) -> Result<(), CliError> {
    let eq = Equilibrium::solve(&cfg.params, &cfg.controls)?;
    let p = cfg.params;
    let per_path = exec.map_indexed(cfg.controls.n_paths, |path| {
        let run = run_path(&eq, path, p.n)?;
        let followers = (0..p.n)
            .map(|i| follower_payoff(i, &run.pop, &run.mf.p_br, &p))
            .collect::<datapricing_core::Result<Vec<_>>>()?;
        let broker = broker_payoff(&run.pop, &run.mf.p_bu, &run.mf.p_br, &p)?;
        let leader = leader_payoff(&run.pop, &run.mf.p_bu, &p)?;
        Ok::<_, datapricing_core::Error>((followers, broker, leader))
    });
    let per_path = per_path.into_iter().collect::<datapricing_core::Result<Vec<_>>>()?;
    let follower = (0..p.n)
        .map(|i| {
            let v: Vec<f64> = per_path.iter().map(|r| r.0[i]).collect();
            aggregate(&v, FunctionalId::Follower(i)).map(|e| PayoffView::from(&e))
        })
        .collect::<datapricing_core::Result<Vec<_>>>()?;
    let broker = aggregate(&per_path.iter().map(|r| r.1).collect::<Vec<_>>(), FunctionalId::Broker)?;
    let leader = aggregate(&per_path.iter().map(|r| r.2).collect::<Vec<_>>(), FunctionalId::Leader)?;
    sink.json(
        "objectives.json",
        &ObjectivesView {
            follower,
            broker: (&broker).into(),
            leader: (&leader).into(),
        },
    )?;
    Ok(())
}

fn write_scaling(sink: &mut OutputSink, stem: &str, report: &ScalingReport) -> Result<(), CliError> {
    sink.json(&format!("{stem}.json"), &ScalingView::from(report))?;
    let rows = report.n_values.iter().zip(&report.cells).flat_map(|(n, cells)| {
        cells
            .iter()
            .enumerate()
            .map(move |(path, v)| vec![n.to_string(), path.to_string(), fmt(*v)])
    });
    sink.csv(&format!("{stem}_cells.csv"), &strings(&["n", "path", "gap"]), rows)?;
    Ok(())
}

pub const DEFAULT_CONSISTENCY_SIZES: [usize; 5] = [10, 30, 100, 300, 1000];
pub const DEFAULT_NASH_SIZES: [usize; 4] = [10, 30, 100, 300];
pub const DEFAULT_EPSILONS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

pub fn consistency_cmd<E: Executor>(
    cfg: &ResolvedConfig,
    exec: &E,
    sink: &mut OutputSink,
    n_values: &[usize],
) -> Result<ScalingReport, CliError> {
    let eq = Equilibrium::solve(&cfg.params, &cfg.controls)?;
    let report = consistency_gap(&eq, n_values, cfg.controls.n_paths, exec)?;
    write_scaling(sink, "consistency", &report)?;
    Ok(report)
}

#[derive(Serialize)]
struct NashView {
    #[serde(flatten)]
    scaling: ScalingView,
    family: Vec<String>,
    by_deviation: Vec<DeviationView>,
}

#[derive(Serialize)]
struct DeviationView {
    deviation: String,
    gains: Vec<EstimateView>,
}

pub fn nash_cmd<E: Executor>(
    cfg: &ResolvedConfig,
    exec: &E,
    sink: &mut OutputSink,
    n_values: &[usize],
    family: &[Deviation],
    floor: f64,
) -> Result<ScalingReport, CliError> {
    let eq = Equilibrium::solve(&cfg.params, &cfg.controls)?;
    let (report, raw) = nash_gap(&eq, n_values, family, cfg.controls.n_paths, floor, exec)?;
    let by_deviation = family
        .iter()
        .map(|d| {
            let gains = n_values
                .iter()
                .map(|&n| {
                    let v: Vec<f64> = raw
                        .iter()
                        .filter(|c| c.n == n && c.deviation == *d)
                        .map(|c| c.delta)
                        .collect();
                    Stat::of(&v).map(|s| EstimateView {
                        mean: s.mean,
                        std_error: s.std_error,
                    })
                })
                .collect::<datapricing_core::Result<Vec<_>>>()?;
            Ok(DeviationView {
                deviation: d.label(),
                gains,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    sink.json(
        "nash.json",
        &NashView {
            scaling: ScalingView::from(&report),
            family: family.iter().map(Deviation::label).collect(),
            by_deviation,
        },
    )?;
    let rows = raw
        .iter()
        .map(|c| vec![c.n.to_string(), c.path.to_string(), c.deviation.label(), fmt(c.delta)]);
    sink.csv("nash_cells.csv", &strings(&["n", "path", "deviation", "delta"]), rows)?;
    Ok(report)
}

/// Seed of the `j`-th random perturbation direction.
pub fn direction_seed(seed: u64, j: usize) -> u64 {
    seed ^ 0xD1B5_4A32_D192_ED03u64.wrapping_mul(j as u64 + 1)
}

#[derive(Serialize)]
struct StationaritySet {
    amplitude: f64,
    reports: Vec<StationarityView>,
    all_pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn stationarity_cmd<E: Executor>(
    cfg: &ResolvedConfig,
    exec: &E,
    sink: &mut OutputSink,
    roles: &[Role],
    directions: usize,
    epsilons: &[f64],
    amplitude: f64,
) -> Result<bool, CliError> {
    let eq = Equilibrium::solve(&cfg.params, &cfg.controls)?;
    let mut views = Vec::new();
    let mut rows = Vec::new();
    for &role in roles {
        for j in 0..directions {
            let seed = direction_seed(cfg.controls.seed, j);
            let dir = smooth_direction(&eq.grid, seed, amplitude);
            let r = stationarity_check(&eq, role, epsilons, &dir, cfg.controls.n_paths, exec)?;
            for (path, (a, b)) in r.per_path.iter().enumerate() {
                rows.push(vec![
                    role.label().to_string(),
                    j.to_string(),
                    path.to_string(),
                    fmt(*a),
                    fmt(*b),
                ]);
            }
            views.push(StationarityView::new(&r, j, seed));
        }
    }
    let all_pass = views.iter().all(|v| v.passes);
    sink.json(
        "stationarity.json",
        &StationaritySet {
            amplitude,
            reports: views,
            all_pass,
        },
    )?;
    sink.csv(
        "stationarity_cells.csv",
        &strings(&["role", "direction", "path", "first_order", "second_order"]),
        rows,
    )?;
    Ok(all_pass)
}

#[derive(Serialize)]
struct SweepView {
    parameter: String,
    values: Vec<f64>,
    summaries: Vec<Summary>,
    /// Direction of each summary column across the sweep values.
    trends: Vec<(String, &'static str)>,
}

/// Resolves every sweep point, failing with the first invalid one.
pub fn sweep_points(cfg: &ResolvedConfig, param: &str, values: &[f64]) -> Result<Vec<MarketParams>, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if !v.is_finite() {
                return Err(CliError::Validation(format!(
                    "sweep point {i} ({param} = {v}) is not finite"
                )));
            }
            let mut p = cfg.params;
            p.set(param, v).map_err(|e| CliError::Usage(e.to_string()))?;
            gate(&p).map_err(|e| CliError::Validation(format!("sweep point {i} ({param} = {v}): {e}")))?;
            Ok(p)
        })
        .collect()
}

pub fn sweep_cmd<E: Executor>(
    cfg: &ResolvedConfig,
    exec: &E,
    sink: &mut OutputSink,
    param: &str,
    values: &[f64],
) -> Result<Vec<Summary>, CliError> {
    let points = sweep_points(cfg, param, values)?;
    let mut summaries = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let eq = Equilibrium::solve(p, &cfg.controls)?;
        let (summary, curves) = monte_carlo(&eq, exec, None)?;
        write_curves(sink, &format!("sweep_{param}_{i}_means.csv"), &eq, &curves)?;
        summaries.push(summary);
    }
    let mut header = strings(&["parameter", "value"]);
    header.extend(Summary::header());
    let rows = values.iter().zip(&summaries).map(|(v, s)| {
        let mut row = vec![param.to_string(), fmt(*v)];
        row.extend(s.row());
        row
    });
    sink.csv("sweep_summary.csv", &header, rows)?;
    let trends = crate::pipeline::SUMMARY_COLUMNS
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let series: Vec<f64> = summaries.iter().map(|s| s.stats()[j].mean).collect();
            (name.to_string(), trend(&series))
        })
        .collect();
    sink.json(
        "sweep.json",
        &SweepView {
            parameter: param.to_string(),
            values: values.to_vec(),
            summaries: summaries.clone(),
            trends,
        },
    )?;
    Ok(summaries)
}
