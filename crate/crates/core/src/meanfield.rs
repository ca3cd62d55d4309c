//! The conditional-mean layer driven by the common noise.
//!
//! With `𝕐 = -g 𝕏 + ψ` the buyer-level system closes as the linear SDE
//! `d𝕏 = ((𝔸1 - 𝔹1 g) 𝕏 + 𝔹1 ψ) dt + 𝔻 dW⁰`, where `ψ` is deterministic.
//! Prices and the follower inputs `ζ`, `m*` are read off the state.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::noise::CommonNoisePath;
use crate::numerics::{cumulative_trapezoid, rk4_backward, rk4_forward, sampled_half, HermiteSamples};
use crate::params::{MarketParams, TimeGrid};
use crate::riccati::{CoefficientMatrices, MatrixRiccatiTable, ScalarRiccatiTable};

/// Backward RK4 for `ψ' = (g 𝔹1 + 𝔹2) ψ + ℂ`, `ψ(T) = 0`.
pub fn solve_psi(c: &CoefficientMatrices, g_table: &MatrixRiccatiTable, grid: &TimeGrid) -> Result<Vec<Vector4<f64>>> {
    grid.check_len(g_table.g.len())?;
    let g = g_table.g_samples(c);
    rk4_backward(grid, Vector4::zeros(), |k2, psi| {
        (g.at_half(k2) * c.bb_b1 + c.bb_b2) * psi + c.bb_c
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldPath {
    pub grid: TimeGrid,
    /// `(Q̄, V̄, K̄, L̄)`.
    pub x: Vec<Vector4<f64>>,
    /// `(Ȳ, Ū, R̄, Ḡ) = -g 𝕏 + ψ`.
    pub y: Vec<Vector4<f64>>,
    pub psi: Arc<Vec<Vector4<f64>>>,
    pub p_bu: Vec<f64>,
    pub p_br: Vec<f64>,
    pub zeta: Vec<f64>,
    pub m_star: Vec<f64>,
    /// `(root seed, path index)` of the common noise, `None` for a
    /// deterministic path.
    pub noise_tag: Option<(u64, u32)>,
}

/// Inputs shared by every mean-field path of one parameter set.
#[derive(Debug, Clone)]
pub struct MeanFieldContext<'a> {
    pub params: &'a MarketParams,
    pub coeffs: &'a CoefficientMatrices,
    pub scalar: &'a ScalarRiccatiTable,
    pub matrix: &'a MatrixRiccatiTable,
    pub psi: &'a Arc<Vec<Vector4<f64>>>,
}

impl MeanFieldContext<'_> {
    fn finish(&self, x: Vec<Vector4<f64>>, noise_tag: Option<(u64, u32)>) -> MeanFieldPath {
        let p = self.params;
        let n = x.len();
        let mut y = Vec::with_capacity(n);
        let mut p_bu = Vec::with_capacity(n);
        let mut p_br = Vec::with_capacity(n);
        let mut zeta = Vec::with_capacity(n);
        let mut m_star = Vec::with_capacity(n);
        for (k, xk) in x.iter().enumerate() {
            let yk = -(self.matrix.g[k] * xk) + self.psi[k];
            p_bu.push(-p.nu * (xk[0] + xk[3]));
            p_br.push(-p.a * (xk[0] + xk[1]));
            zeta.push(yk[0] - self.scalar.vartheta[k] * xk[0]);
            m_star.push(xk[0]);
            y.push(yk);
        }
        MeanFieldPath {
            grid: self.matrix.grid.clone(),
            x,
            y,
            psi: Arc::clone(self.psi),
            p_bu,
            p_br,
            zeta,
            m_star,
            noise_tag,
        }
    }

    fn x0(&self) -> Vector4<f64> {
        Vector4::new(self.params.q0, 0.0, 0.0, 0.0)
    }
}

/// `𝔸1 - 𝔹1 g_k` at every grid point.
pub fn closed_loop_drifts(c: &CoefficientMatrices, m: &MatrixRiccatiTable) -> Vec<Matrix4<f64>> {
    m.g.iter().map(|g| c.bb_a1 - c.bb_b1 * g).collect()
}

/// Euler–Maruyama simulation of the mean state along one common-noise path.
pub fn simulate_mean_state(
    ctx: &MeanFieldContext<'_>,
    drifts: &[Matrix4<f64>],
    noise: &CommonNoisePath,
) -> Result<MeanFieldPath> {
    let grid = &ctx.matrix.grid;
    noise.check_grid(grid)?;
    grid.check_len(drifts.len())?;
    let dt = grid.dt();
    let mut x = Vec::with_capacity(grid.len());
    let mut xk = ctx.x0();
    x.push(xk);
    #[allow(clippy::needless_range_loop)]
    for k in 0..grid.n_steps() {
        let drift = drifts[k] * xk + ctx.coeffs.bb_b1 * ctx.psi[k];
        xk += drift * dt + ctx.coeffs.bb_d * noise.increments[k];
        if xk.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k + 1 });
        }
        x.push(xk);
    }
    Ok(ctx.finish(x, Some((noise.seed, noise.path))))
}

/// Zero-noise mean path integrated by RK4, for comparisons that need more
/// than first-order accuracy.
pub fn deterministic_mean_path(ctx: &MeanFieldContext<'_>) -> Result<MeanFieldPath> {
    let grid = &ctx.matrix.grid;
    let c = ctx.coeffs;
    let g = ctx.matrix.g_samples(c);
    let psi = HermiteSamples {
        values: ctx.psi.to_vec(),
        slopes: ctx
            .psi
            .iter()
            .zip(&ctx.matrix.g)
            .map(|(p, gk)| (gk * c.bb_b1 + c.bb_b2) * p + c.bb_c)
            .collect(),
        dt: grid.dt(),
    };
    let x = rk4_forward(grid, ctx.x0(), |k2, x| {
        (c.bb_a1 - c.bb_b1 * g.at_half(k2)) * x + c.bb_b1 * psi.at_half(k2)
    })?;
    Ok(ctx.finish(x, None))
}

/// `m*` from its explicit solution: trapezoid rule for the time integrals and
/// left-point sums for the stochastic integral.
pub fn m_star_closed_form(
    p: &MarketParams,
    vartheta: &[f64],
    zeta: &[f64],
    noise: &CommonNoisePath,
) -> Result<Vec<f64>> {
    let grid = &noise.grid;
    grid.check_len(vartheta.len())?;
    grid.check_len(zeta.len())?;
    let k = p.effort_gain();
    let dt = grid.dt();
    let theta: Vec<f64> = cumulative_trapezoid(vartheta, dt).into_iter().map(|v| k * v).collect();
    let weighted: Vec<f64> = zeta.iter().zip(&theta).map(|(z, th)| z * libm::exp(-th)).collect();
    let drift = cumulative_trapezoid(&weighted, dt);
    let mut out = Vec::with_capacity(grid.len());
    let mut ito = 0.0;
    for j in 0..grid.len() {
        out.push(libm::exp(theta[j]) * (p.q0 + k * drift[j] + p.sigma0 * ito));
        if j < grid.n_steps() {
            ito += libm::exp(-theta[j]) * noise.increments[j];
        }
    }
    Ok(out)
}

/// Backward RK4 for `ℓ' = (f B1 + B2) ℓ + C`, `ℓ(T) = 0`, with the source
/// `C_t` sampled on the grid (midpoints by cubic interpolation).
pub fn solve_ell(
    c: &CoefficientMatrices,
    f_table: &MatrixRiccatiTable,
    source: &[Vector2<f64>],
) -> Result<Vec<Vector2<f64>>> {
    let grid = &f_table.grid;
    grid.check_len(source.len())?;
    let f = f_table.f_samples(c);
    rk4_backward(grid, Vector2::zeros(), |k2, ell| {
        (f.at_half(k2) * c.b1 + c.b2) * ell + sampled_half(source, k2)
    })
}

/// Euler–Maruyama for the broker-level state
/// `dX = (A1 X + B1 (-f X + ℓ)) dt + D dW⁰`, `X_0 = (q0, 0)`.
pub fn broker_forward(
    c: &CoefficientMatrices,
    f: &[Matrix2<f64>],
    ell: &[Vector2<f64>],
    q0: f64,
    noise: &CommonNoisePath,
) -> Result<Vec<Vector2<f64>>> {
    let dt = noise.grid.dt();
    let mut x = Vec::with_capacity(noise.grid.len());
    let mut xk = Vector2::new(q0, 0.0);
    x.push(xk);
    for k in 0..noise.grid.n_steps() {
        let y = -(f[k] * xk) + ell[k];
        xk += (c.a1 * xk + c.b1 * y) * dt + c.d * noise.increments[k];
        if xk.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { step: k + 1 });
        }
        x.push(xk);
    }
    Ok(x)
}

/// `((Q̄, V̄) path, ℓ path)`.
pub type BrokerLayer = (Vec<Vector2<f64>>, Vec<Vector2<f64>>);

/// Solves the broker-level decoupled system on its own for a given buyer
/// price path: `ℓ` by pathwise backward integration, then the forward state.
/// Returns `((Q̄, V̄) path, ℓ path)`.
pub fn broker_layer_cross_check(
    p: &MarketParams,
    c: &CoefficientMatrices,
    f_table: &MatrixRiccatiTable,
    p_bu: &[f64],
    noise: &CommonNoisePath,
) -> Result<BrokerLayer> {
    let grid = &f_table.grid;
    if p_bu.len() != grid.len() {
        return Err(Error::PerturbationMismatch {
            expected: grid.len(),
            got: p_bu.len(),
        });
    }
    noise.check_grid(grid)?;
    let source: Vec<Vector2<f64>> = p_bu.iter().map(|&v| c.c_price * v).collect();
    let ell = solve_ell(c, f_table, &source)?;
    let x = broker_forward(c, &f_table.f, &ell, p.q0, noise)?;
    Ok((x, ell))
}
