//! First- and second-order checks of the leaders' prices.
//!
//! A deterministic direction `δ` is added to the broker's (or buyer's) price
//! and the followers' response is propagated through the decoupling fields:
//! for the broker, `ζ` shifts by the solution of
//! `ζ_δ' = (α - k ϑ) ζ_δ - a δ`, `ζ_δ(T) = 0`; for the buyer, the broker-level
//! offset `ℓ` shifts by the solution of `ℓ_δ' = (f B1 + B2) ℓ_δ + C δ`.
//! The auxiliary objective is then evaluated on a representative seller.

use alloc::vec::Vec;

use nalgebra::Vector2;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::{Estimate, StationarityReport};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::meanfield::{broker_forward, solve_ell, MeanFieldPath};
use crate::noise::{brownian_increments, CommonNoisePath, StreamKind};
use crate::numerics::{fit_linear_quadratic, mean_and_se, rk4_backward, sampled_half, trapezoid};
use crate::params::{MarketParams, TimeGrid};
use crate::population::adjoint_value;
use crate::riccati::ScalarRiccatiTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Broker,
    Buyer,
}

impl Role {
    pub fn label(&self) -> &'static str {
        match self {
            Role::Broker => "broker",
            Role::Buyer => "buyer",
        }
    }
}

/// Random smooth direction `Σ_j z_j / j · sin(j π t / T + φ_j)`, `j = 1..4`,
/// scaled to a maximum modulus of `amplitude`.
pub fn smooth_direction(grid: &TimeGrid, seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64)> = (1..=4)
        .map(|j| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let u: f64 = StandardNormal.sample(&mut rng);
            (z / j as f64, u)
        })
        .collect();
    let pi = core::f64::consts::PI;
    let raw: Vec<f64> = grid
        .points()
        .iter()
        .map(|t| {
            terms
                .iter()
                .enumerate()
                .map(|(j, (w, phase))| w * libm::sin((j + 1) as f64 * pi * t / grid.horizon() + phase))
                .sum()
        })
        .collect();
    let top = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return raw;
    }
    raw.into_iter().map(|v| v * amplitude / top).collect()
}

/// Euler path of a representative seller facing `m` and `ζ`.
fn representative_quality(
    p: &MarketParams,
    scalar: &ScalarRiccatiTable,
    m: &[f64],
    zeta: &[f64],
    noise: &CommonNoisePath,
    dw: &[f64],
) -> Vec<f64> {
    let dt = noise.grid.dt();
    let k = p.effort_gain();
    let mut q = Vec::with_capacity(m.len());
    let mut qk = p.q0;
    q.push(qk);
    for j in 0..noise.grid.n_steps() {
        let y = adjoint_value(scalar.xi[j], scalar.vartheta[j], zeta[j], m[j], qk);
        qk += (p.alpha * (m[j] - qk) + k * y) * dt + p.sigma * dw[j] + p.sigma0 * noise.increments[j];
        q.push(qk);
    }
    q
}

struct PathInputs<'a> {
    eq: &'a Equilibrium,
    mf: MeanFieldPath,
    noise: CommonNoisePath,
    dw: Vec<f64>,
    /// Broker level offset along the equilibrium path.
    ell: Vec<Vector2<f64>>,
}

impl PathInputs<'_> {
    fn broker_objective(&self, eps: f64, delta: &[f64], zeta_delta: &[f64]) -> f64 {
        let eq = self.eq;
        let p = &eq.params;
        let dt = eq.grid.dt();
        let k = p.effort_gain();
        let len = eq.grid.len();
        let p_br: Vec<f64> = (0..len).map(|j| self.mf.p_br[j] + eps * delta[j]).collect();
        let zeta: Vec<f64> = (0..len).map(|j| self.mf.zeta[j] + eps * zeta_delta[j]).collect();
        let mut m = Vec::with_capacity(len);
        let mut mk = p.q0;
        m.push(mk);
        #[allow(clippy::needless_range_loop)]
        for j in 0..eq.grid.n_steps() {
            mk += k * (eq.scalar.vartheta[j] * mk + zeta[j]) * dt + p.sigma0 * self.noise.increments[j];
            m.push(mk);
        }
        let q = representative_quality(p, &eq.scalar, &m, &zeta, &self.noise, &self.dw);
        let integrand: Vec<f64> = (0..len)
            .map(|j| {
                let (pb, pr) = (self.mf.p_bu[j], p_br[j]);
                p.nu * pb * q[j] - p.a * pr * q[j] - p.kappa * q[j] * q[j] - 0.5 * pr * pr
            })
            .collect();
        trapezoid(&integrand, dt)
    }

    fn buyer_objective(&self, eps: f64, delta: &[f64], ell_delta: &[Vector2<f64>]) -> Result<f64> {
        let eq = self.eq;
        let p = &eq.params;
        let len = eq.grid.len();
        let ell: Vec<Vector2<f64>> = (0..len).map(|j| self.ell[j] + ell_delta[j] * eps).collect();
        let x = broker_forward(&eq.coeffs, &eq.matrix.f, &ell, p.q0, &self.noise)?;
        let mut m = Vec::with_capacity(len);
        let mut zeta = Vec::with_capacity(len);
        for j in 0..len {
            let y = (-(eq.matrix.f[j] * x[j]) + ell[j])[0];
            m.push(x[j][0]);
            zeta.push(y - eq.scalar.vartheta[j] * x[j][0]);
        }
        let q = representative_quality(p, &eq.scalar, &m, &zeta, &self.noise, &self.dw);
        let integrand: Vec<f64> = (0..len)
            .map(|j| {
                let pb = self.mf.p_bu[j] + eps * delta[j];
                -0.5 * pb * pb + p.lambda * q[j] - p.rho * q[j] * q[j] - pb * p.nu * q[j]
            })
            .collect();
        Ok(trapezoid(&integrand, eq.grid.dt()))
    }
}

/// Fits `J(p* + ε δ) - J(p*) = -A ε - B ε²` path by path and averages.
pub fn stationarity_check<E: Executor>(
    eq: &Equilibrium,
    role: Role,
    epsilons: &[f64],
    perturbation: &[f64],
    n_paths: usize,
    exec: &E,
) -> Result<StationarityReport> {
    let grid = &eq.grid;
    if perturbation.len() != grid.len() {
        return Err(Error::PerturbationMismatch {
            expected: grid.len(),
            got: perturbation.len(),
        });
    }
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidParams("epsilons must lie in (0, 1]".into()));
    }
    let p = &eq.params;
    let k = p.effort_gain();
    let zeta_delta = rk4_backward(grid, 0.0, |k2, z| {
        (p.alpha - k * eq.scalar.vartheta_half(k2)) * z - p.a * sampled_half(perturbation, k2)
    })?;
    let source: Vec<Vector2<f64>> = perturbation.iter().map(|&d| eq.coeffs.c_price * d).collect();
    let ell_delta = solve_ell(&eq.coeffs, &eq.matrix, &source)?;

    let seed = eq.controls.seed;
    let per_path: Vec<Result<Vec<f64>>> = exec.map_indexed(n_paths, |path| {
        let noise = eq.common_noise(path as u32);
        let mf = eq.mean_path(&noise)?;
        let dw = brownian_increments(
            seed,
            StreamKind::Representative,
            path as u32,
            0,
            grid.n_steps(),
            grid.dt(),
        );
        let ell = (0..grid.len())
            .map(|j| {
                let x = mf.x[j];
                Vector2::new(mf.y[j][0], mf.y[j][1]) + eq.matrix.f[j] * Vector2::new(x[0], x[1])
            })
            .collect();
        let inputs = PathInputs { eq, mf, noise, dw, ell };
        let objective = |eps: f64| -> Result<f64> {
            match role {
                Role::Broker => Ok(inputs.broker_objective(eps, perturbation, &zeta_delta)),
                Role::Buyer => inputs.buyer_objective(eps, perturbation, &ell_delta),
            }
        };
        let base = objective(0.0)?;
        epsilons.iter().map(|&e| Ok(objective(e)? - base)).collect()
    });
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;

    let payoff_deltas = (0..epsilons.len())
        .map(|i| {
            let v: Vec<f64> = per_path.iter().map(|r| r[i]).collect();
            mean_and_se(&v).map(|(mean, std_error)| Estimate { mean, std_error })
        })
        .collect::<Result<Vec<_>>>()?;
    let fits: Vec<(f64, f64)> = per_path
        .iter()
        .map(|d| {
            let (c1, c2) = fit_linear_quadratic(epsilons, d);
            (-c1, -c2)
        })
        .collect();
    let (a, se_a) = mean_and_se(&fits.iter().map(|f| f.0).collect::<Vec<_>>())?;
    let (b, se_b) = mean_and_se(&fits.iter().map(|f| f.1).collect::<Vec<_>>())?;
    Ok(StationarityReport {
        role,
        epsilons: epsilons.to_vec(),
        payoff_deltas,
        first_order_coefficient: a,
        first_order_std_error: se_a,
        second_order_coefficient: b,
        second_order_std_error: se_b,
        per_path: fits,
    })
}
