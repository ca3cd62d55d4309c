//! Empirical checks of the asymptotic claims: mean-field consistency rate,
//! ε-Nash gaps, first- and second-order conditions of the leaders' prices,
//! and a shooting oracle for the follower's two-point boundary problem.

mod consistency;
mod nash;
mod shooting;
mod stationarity;

use alloc::string::String;
use alloc::vec::Vec;

pub use consistency::consistency_gap;
pub use nash::{best_response_plan, best_response_shortfall, nash_gap, simulate_deviation, Deviation, NashCell, Plan};
pub use shooting::{shooting_oracle, ShootingSolution};
pub use stationarity::{smooth_direction, stationarity_check, Role};

use crate::error::{Error, Result};
use crate::numerics::fit_line;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub n_values: Vec<usize>,
    pub gaps: Vec<Estimate>,
    /// Least-squares slope of `ln gap` against `ln n`; `None` when some
    /// gap is not positive.
    pub fitted_slope: Option<f64>,
    /// Slope standard error propagated from the per-point Monte Carlo errors.
    pub slope_std_error: f64,
    /// Slope standard error from the scatter about the fitted line.
    pub slope_residual_error: f64,
    /// 95% interval, `slope ± 1.96 * max(propagated, residual)`.
    pub slope_ci: Option<(f64, f64)>,
    /// Gap values entered into the log fit (after flooring).
    pub fitted_gaps: Vec<f64>,
    /// Raw per-cell values: `cells[i][path]` for `n_values[i]`.
    pub cells: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub role: Role,
    pub epsilons: Vec<f64>,
    /// Mean payoff change at each epsilon.
    pub payoff_deltas: Vec<Estimate>,
    /// `A` in `delta(ε) = -A ε - B ε²`.
    pub first_order_coefficient: f64,
    pub first_order_std_error: f64,
    /// `B` in `delta(ε) = -A ε - B ε²`.
    pub second_order_coefficient: f64,
    pub second_order_std_error: f64,
    /// Per-path `(A, B)` fits.
    pub per_path: Vec<(f64, f64)>,
}

impl StationarityReport {
    /// `|A| ≤ 3 SE(A)` and `B ≥ 0`.
    pub fn passes(&self) -> bool {
        self.first_order_coefficient.abs() <= 3.0 * self.first_order_std_error && self.second_order_coefficient >= 0.0
    }
}

/// Log-log fit over population sizes. `floor` replaces gaps below it.
pub(crate) fn scaling_fit(
    n_values: &[usize],
    gaps: Vec<Estimate>,
    cells: Vec<Vec<f64>>,
    floor: f64,
    mut notes: Vec<String>,
) -> Result<ScalingReport> {
    if n_values.len() < 3 {
        return Err(Error::TooFewSizes {
            needed: 3,
            got: n_values.len(),
        });
    }
    let fitted_gaps: Vec<f64> = gaps.iter().map(|g| g.mean.max(floor)).collect();
    if fitted_gaps.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
        notes.push("some gaps are not positive; the log fit is undefined".into());
        return Ok(ScalingReport {
            n_values: n_values.to_vec(),
            gaps,
            fitted_slope: None,
            slope_std_error: 0.0,
            slope_residual_error: 0.0,
            slope_ci: None,
            fitted_gaps,
            cells,
            notes,
        });
    }
    if gaps.iter().any(|g| g.mean < floor) {
        notes.push(alloc::format!("gaps below {floor:e} were floored for the log fit"));
    }
    let x: Vec<f64> = n_values.iter().map(|&n| libm::log(n as f64)).collect();
    let y: Vec<f64> = fitted_gaps.iter().map(|&g| libm::log(g)).collect();
    let err: Vec<f64> = gaps
        .iter()
        .zip(&fitted_gaps)
        .map(|(g, &f)| if g.mean >= floor { g.std_error / f } else { 0.0 })
        .collect();
    let fit = fit_line(&x, &y, &err)?;
    let half = 1.96 * fit.slope_se_propagated.max(fit.slope_se_residual);
    Ok(ScalingReport {
        n_values: n_values.to_vec(),
        gaps,
        fitted_slope: Some(fit.slope),
        slope_std_error: fit.slope_se_propagated,
        slope_residual_error: fit.slope_se_residual,
        slope_ci: Some((fit.slope - half, fit.slope + half)),
        fitted_gaps,
        cells,
        notes,
    })
}

pub(crate) fn check_sizes(n_values: &[usize]) -> Result<()> {
    if n_values.len() < 3 {
        return Err(Error::TooFewSizes {
            needed: 3,
            got: n_values.len(),
        });
    }
    for w in n_values.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParams(
                "population sizes must be strictly increasing".into(),
            ));
        }
    }
    if n_values[0] < 2 {
        return Err(Error::TooFewSellers(n_values[0]));
    }
    Ok(())
}
