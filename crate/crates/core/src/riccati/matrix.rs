//! Asymmetric matrix Riccati equations
//!
//! ```text
//! f' = -f A1 + f B1 f + B2 f - A2,   f(T) = 0,
//! ```
//!
//! solved by the Hamiltonian block formula: with `E = exp(M (t - T))` and
//! `M = [[A1, -B1], [-A2, B2]]`, `P = E[0..N, 0..N]`, `R = E[N..2N, 0..N]`,
//! the solution is `f = R P⁻¹` wherever `det P > 0`.

use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix4, SMatrix};

use super::coefficients::{assemble_coefficients, CoefficientMatrices};
use super::expm::matrix_exponential;
use crate::error::{Error, Result};
use crate::numerics::{lu_solve, rk4_backward, HermiteSamples};
use crate::params::{MarketParams, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRiccatiTable {
    pub grid: TimeGrid,
    pub f: Vec<Matrix2<f64>>,
    pub g: Vec<Matrix4<f64>>,
    pub det_f: Vec<f64>,
    pub det_g: Vec<f64>,
    pub min_det_f: f64,
    pub min_det_g: f64,
    /// Largest 1-norm condition number of the inverted block along the grid.
    pub max_cond_f: f64,
    pub max_cond_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityReport {
    pub min_det_f: f64,
    pub argmin_f: f64,
    pub min_det_g: f64,
    pub argmin_g: f64,
    pub det_f: Vec<f64>,
    pub det_g: Vec<f64>,
}

#[inline]
pub fn rde_rhs<const N: usize>(
    x: &SMatrix<f64, N, N>,
    a1: &SMatrix<f64, N, N>,
    b1: &SMatrix<f64, N, N>,
    a2: &SMatrix<f64, N, N>,
    b2: &SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    -(x * a1) + x * b1 * x + b2 * x - a2
}

struct BlockPoint<const N: usize> {
    det: f64,
    value: Option<(SMatrix<f64, N, N>, f64)>,
}

fn norm1<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    (0..N)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Evaluates the block formula at time offset `s = t - T`. `value` is `None`
/// when the propagated block is singular.
fn block_point<const N: usize, const M: usize>(ham: &SMatrix<f64, M, M>, s: f64) -> Result<BlockPoint<N>> {
    let e = matrix_exponential(ham, s)?;
    let p: SMatrix<f64, N, N> = e.fixed_view::<N, N>(0, 0).into_owned();
    let r: SMatrix<f64, N, N> = e.fixed_view::<N, N>(N, 0).into_owned();
    let (sol, det) = lu_solve(&p.transpose(), &r.transpose());
    let value = sol.map(|x| {
        let inv = lu_solve(&p, &SMatrix::<f64, N, N>::identity()).0;
        let inv_norm = inv.map(|i| norm1(&i)).unwrap_or(f64::INFINITY);
        (x.transpose(), norm1(&p) * inv_norm)
    });
    Ok(BlockPoint { det, value })
}

fn determinant_path<const N: usize, const M: usize>(ham: &SMatrix<f64, M, M>, grid: &TimeGrid) -> Result<Vec<f64>> {
    let horizon = grid.horizon();
    grid.points()
        .iter()
        .map(|&t| block_point::<N, M>(ham, t - horizon).map(|b| b.det))
        .collect()
}

fn argmin(grid: &TimeGrid, v: &[f64]) -> (f64, f64) {
    let mut best = (f64::INFINITY, grid.t(0));
    for (k, &d) in v.iter().enumerate() {
        // NaN determinants count as failures.
        if d < best.0 || d.is_nan() {
            best = (if d.is_nan() { f64::NEG_INFINITY } else { d }, grid.t(k));
        }
    }
    best
}

/// Determinants of the propagated blocks for both Hamiltonians.
pub fn solvability_check(p: &MarketParams, grid: &TimeGrid) -> Result<SolvabilityReport> {
    let c = assemble_coefficients(p);
    let det_f = determinant_path::<2, 4>(&c.broker_hamiltonian(), grid)?;
    let det_g = determinant_path::<4, 8>(&c.buyer_hamiltonian(), grid)?;
    let (min_det_f, argmin_f) = argmin(grid, &det_f);
    let (min_det_g, argmin_g) = argmin(grid, &det_g);
    Ok(SolvabilityReport {
        min_det_f,
        argmin_f,
        min_det_g,
        argmin_g,
        det_f,
        det_g,
    })
}

type BlockSolution<const N: usize> = (Vec<SMatrix<f64, N, N>>, Vec<f64>, f64, f64);

fn block_solve<const N: usize, const M: usize>(
    ham: &SMatrix<f64, M, M>,
    grid: &TimeGrid,
    det_floor: f64,
    which: &'static str,
) -> Result<BlockSolution<N>> {
    let horizon = grid.horizon();
    let mut values = Vec::with_capacity(grid.len());
    let mut dets = Vec::with_capacity(grid.len());
    let mut min_det = f64::INFINITY;
    let mut max_cond: f64 = 0.0;
    for (k, &t) in grid.points().iter().enumerate() {
        let bp = block_point::<N, M>(ham, t - horizon)?;
        let solved = match bp.value {
            Some(v) if bp.det > det_floor => v,
            _ => return Err(Error::Unsolvable { which, t, det: bp.det }),
        };
        let (mut x, cond) = solved;
        if k + 1 == grid.len() {
            // exp(0) = I, so the numerator block is exactly zero.
            x = SMatrix::zeros();
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        min_det = min_det.min(bp.det);
        max_cond = max_cond.max(cond);
        values.push(x);
        dets.push(bp.det);
    }
    Ok((values, dets, min_det, max_cond))
}

/// Solves both matrix Riccati equations on `grid`. Fails if either
/// determinant drops to `det_floor` or below.
pub fn solve_matrix_riccati(p: &MarketParams, grid: &TimeGrid, det_floor: f64) -> Result<MatrixRiccatiTable> {
    let c = assemble_coefficients(p);
    let (f, det_f, min_det_f, max_cond_f) = block_solve::<2, 4>(&c.broker_hamiltonian(), grid, det_floor, "f")?;
    let (g, det_g, min_det_g, max_cond_g) = block_solve::<4, 8>(&c.buyer_hamiltonian(), grid, det_floor, "g")?;
    Ok(MatrixRiccatiTable {
        grid: grid.clone(),
        f,
        g,
        det_f,
        det_g,
        min_det_f,
        min_det_g,
        max_cond_f,
        max_cond_g,
    })
}

impl MatrixRiccatiTable {
    pub fn f_samples(&self, c: &CoefficientMatrices) -> HermiteSamples<Matrix2<f64>> {
        HermiteSamples {
            slopes: self.f.iter().map(|x| rde_rhs(x, &c.a1, &c.b1, &c.a2, &c.b2)).collect(),
            values: self.f.clone(),
            dt: self.grid.dt(),
        }
    }

    pub fn g_samples(&self, c: &CoefficientMatrices) -> HermiteSamples<Matrix4<f64>> {
        HermiteSamples {
            slopes: self
                .g
                .iter()
                .map(|x| rde_rhs(x, &c.bb_a1, &c.bb_b1, &c.bb_a2, &c.bb_b2))
                .collect(),
            values: self.g.clone(),
            dt: self.grid.dt(),
        }
    }

    /// Max-norm central-difference residuals of the two RDEs at interior points.
    pub fn residuals(&self, c: &CoefficientMatrices) -> (f64, f64) {
        let h = self.grid.dt();
        let res_f = central_residual(&self.f, h, |x| rde_rhs(x, &c.a1, &c.b1, &c.a2, &c.b2));
        let res_g = central_residual(&self.g, h, |x| rde_rhs(x, &c.bb_a1, &c.bb_b1, &c.bb_a2, &c.bb_b2));
        (res_f, res_g)
    }
}

fn central_residual<const N: usize>(
    v: &[SMatrix<f64, N, N>],
    h: f64,
    rhs: impl Fn(&SMatrix<f64, N, N>) -> SMatrix<f64, N, N>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..v.len() - 1 {
        let d = (v[k + 1] - v[k - 1]) / (2.0 * h) - rhs(&v[k]);
        worst = worst.max(d.amax());
    }
    worst
}

/// Backward RK4 oracle for one matrix Riccati equation.
pub fn matrix_riccati_oracle<const N: usize>(
    a1: &SMatrix<f64, N, N>,
    b1: &SMatrix<f64, N, N>,
    a2: &SMatrix<f64, N, N>,
    b2: &SMatrix<f64, N, N>,
    grid: &TimeGrid,
) -> Result<Vec<SMatrix<f64, N, N>>> {
    rk4_backward(grid, SMatrix::zeros(), |_, x| rde_rhs(x, a1, b1, a2, b2))
}
