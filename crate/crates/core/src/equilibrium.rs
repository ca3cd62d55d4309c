use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::meanfield::{self, MeanFieldContext, MeanFieldPath};
use crate::noise::CommonNoisePath;
use crate::params::{MarketParams, NumericalControls, TimeGrid, FIELD_NAMES};
use crate::riccati::{
    assemble_coefficients, scalar_closed_form, solve_matrix_riccati, CoefficientMatrices, MatrixRiccatiTable,
    ScalarRiccatiTable,
};

/// Everything deterministic about one parameter set: Riccati tables, the dual
/// path `ψ` and the closed-loop drift of the mean state. Shared read-only by
/// all Monte Carlo paths.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub params: MarketParams,
    pub controls: NumericalControls,
    pub grid: TimeGrid,
    pub coeffs: CoefficientMatrices,
    pub scalar: ScalarRiccatiTable,
    pub matrix: MatrixRiccatiTable,
    pub psi: Arc<Vec<Vector4<f64>>>,
    pub drifts: Vec<Matrix4<f64>>,
}

impl Equilibrium {
    /// Solves the deterministic part of the equilibrium.
    ///
    /// Only finiteness, `c > 0` and `T > 0` are enforced here; degenerate
    /// values such as zero volatilities are accepted. Use
    /// [`crate::params::validate`] to gate on the model invariants.
    pub fn solve(params: &MarketParams, controls: &NumericalControls) -> Result<Self> {
        controls.validate()?;
        for name in FIELD_NAMES {
            let v = params.get(name).unwrap_or(f64::NAN);
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if params.c <= 0.0 {
            return Err(Error::InvalidParams(format!("c must be positive, got {}", params.c)));
        }
        let grid = TimeGrid::new(params.horizon, controls.n_steps)?;
        let coeffs = assemble_coefficients(params);
        let scalar = scalar_closed_form(params, &grid)?;
        let matrix = solve_matrix_riccati(params, &grid, controls.det_floor)?;
        let psi = Arc::new(meanfield::solve_psi(&coeffs, &matrix, &grid)?);
        let drifts = meanfield::closed_loop_drifts(&coeffs, &matrix);
        Ok(Self {
            params: *params,
            controls: *controls,
            grid,
            coeffs,
            scalar,
            matrix,
            psi,
            drifts,
        })
    }

    pub fn context(&self) -> MeanFieldContext<'_> {
        MeanFieldContext {
            params: &self.params,
            coeffs: &self.coeffs,
            scalar: &self.scalar,
            matrix: &self.matrix,
            psi: &self.psi,
        }
    }

    /// Common noise for Monte Carlo path `path` under the configured seed.
    pub fn common_noise(&self, path: u32) -> CommonNoisePath {
        CommonNoisePath::generate(self.controls.seed, path, &self.grid)
    }

    pub fn mean_path(&self, noise: &CommonNoisePath) -> Result<MeanFieldPath> {
        meanfield::simulate_mean_state(&self.context(), &self.drifts, noise)
    }

    pub fn deterministic_mean_path(&self) -> Result<MeanFieldPath> {
        meanfield::deterministic_mean_path(&self.context())
    }
}
