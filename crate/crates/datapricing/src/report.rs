//! Serializable views of the core reports.

use datapricing_core::objectives::PayoffEstimate;
use datapricing_core::params::{CheckStatus, ValidationReport};
use datapricing_core::verification::{Estimate, ScalingReport, StationarityReport};
use serde::Serialize;

#[derive(Serialize)]
pub struct CheckView {
    pub name: String,
    pub status: &'static str,
    pub message: String,
}

#[derive(Serialize)]
pub struct ValidationView {
    pub passed: bool,
    pub checks: Vec<CheckView>,
}

impl From<&ValidationReport> for ValidationView {
    fn from(r: &ValidationReport) -> Self {
        Self {
            passed: r.passed(),
            checks: r
                .checks
                .iter()
                .map(|c| CheckView {
                    name: c.name.clone(),
                    status: match c.status {
                        CheckStatus::Pass => "pass",
                        CheckStatus::Warn => "warn",
                        CheckStatus::Fail => "fail",
                    },
                    message: c.message.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Clone, Copy)]
pub struct EstimateView {
    pub mean: f64,
    pub std_error: f64,
}

impl From<&Estimate> for EstimateView {
    fn from(e: &Estimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.std_error,
        }
    }
}

#[derive(Serialize)]
pub struct PayoffView {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl From<&PayoffEstimate> for PayoffView {
    fn from(e: &PayoffEstimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.std_error,
            n_samples: e.n_samples,
        }
    }
}

#[derive(Serialize)]
pub struct ScalingView {
    pub n_values: Vec<usize>,
    pub gaps: Vec<EstimateView>,
    pub fitted_slope: Option<f64>,
    pub slope_std_error: f64,
    pub slope_residual_error: f64,
    pub slope_ci: Option<[f64; 2]>,
    pub fitted_gaps: Vec<f64>,
    pub n_paths: usize,
    pub notes: Vec<String>,
}

impl From<&ScalingReport> for ScalingView {
    fn from(r: &ScalingReport) -> Self {
        Self {
            n_values: r.n_values.clone(),
            gaps: r.gaps.iter().map(Into::into).collect(),
            fitted_slope: r.fitted_slope,
            slope_std_error: r.slope_std_error,
            slope_residual_error: r.slope_residual_error,
            slope_ci: r.slope_ci.map(|(a, b)| [a, b]),
            fitted_gaps: r.fitted_gaps.clone(),
            n_paths: r.cells.first().map_or(0, Vec::len),
            notes: r.notes.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct StationarityView {
    pub role: &'static str,
    pub direction: usize,
    pub direction_seed: u64,
    pub epsilons: Vec<f64>,
    pub payoff_deltas: Vec<EstimateView>,
    pub first_order_coefficient: f64,
    pub first_order_std_error: f64,
    pub second_order_coefficient: f64,
    pub second_order_std_error: f64,
    pub passes: bool,
}

impl StationarityView {
    pub fn new(r: &StationarityReport, direction: usize, direction_seed: u64) -> Self {
        Self {
            role: r.role.label(),
            direction,
            direction_seed,
            epsilons: r.epsilons.clone(),
            payoff_deltas: r.payoff_deltas.iter().map(Into::into).collect(),
            first_order_coefficient: r.first_order_coefficient,
            first_order_std_error: r.first_order_std_error,
            second_order_coefficient: r.second_order_coefficient,
            second_order_std_error: r.second_order_std_error,
            passes: r.passes(),
        }
    }
}

/// Direction of a sequence of values.
pub fn trend(values: &[f64]) -> &'static str {
    let inc = values.windows(2).all(|w| w[1] > w[0]);
    let dec = values.windows(2).all(|w| w[1] < w[0]);
    match (inc, dec) {
        _ if values.len() < 2 => "undetermined",
        (true, _) => "increasing",
        (_, true) => "decreasing",
        _ if values.windows(2).all(|w| w[1] == w[0]) => "constant",
        _ => "non-monotone",
    }
}
