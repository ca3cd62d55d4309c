//! Shooting solver for the follower's deterministic forward-backward system
//!
//! `Q' = α (m - Q) + k Y`, `Y' = b Q + α Y - a p_br`, `Q(0) = q0`, `Y(T) = 0`,
//!
//! independent of the Riccati decoupling.

use alloc::vec::Vec;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::numerics::{rk4_forward, sampled_half};
use crate::params::{MarketParams, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingSolution {
    pub q: Vec<f64>,
    pub y: Vec<f64>,
    pub y0: f64,
    /// Residual `Y_T` of the accepted shot.
    pub terminal_residual: f64,
    pub iterations: usize,
}

const MAX_EXPANSIONS: usize = 60;
const MAX_ITERATIONS: usize = 200;

/// Shoots on `Y_0` until `|Y_T| ≤ tol`. `p_br` and `m` are sampled on `grid`.
pub fn shooting_oracle(
    p: &MarketParams,
    p_br: &[f64],
    m: &[f64],
    grid: &TimeGrid,
    tol: f64,
) -> Result<ShootingSolution> {
    grid.check_len(p_br.len())?;
    grid.check_len(m.len())?;
    let k = p.effort_gain();
    let shoot = |y0: f64| -> Result<Vec<Vector2<f64>>> {
        rk4_forward(grid, Vector2::new(p.q0, y0), |k2, s| {
            let (mm, pb) = (sampled_half(m, k2), sampled_half(p_br, k2));
            Vector2::new(p.alpha * (mm - s[0]) + k * s[1], p.b * s[0] + p.alpha * s[1] - p.a * pb)
        })
    };
    let end = |path: &[Vector2<f64>]| path[path.len() - 1][1];

    // Bracket by symmetric expansion around zero.
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut path_lo = shoot(lo)?;
    let mut path_hi = shoot(hi)?;
    let (mut f_lo, mut f_hi) = (end(&path_lo), end(&path_hi));
    let mut iterations = 2;
    let mut expansions = 0;
    while f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        if expansions == MAX_EXPANSIONS {
            return Err(Error::ShootingBracket { lo, hi });
        }
        lo *= 2.0;
        hi *= 2.0;
        path_lo = shoot(lo)?;
        path_hi = shoot(hi)?;
        f_lo = end(&path_lo);
        f_hi = end(&path_hi);
        iterations += 2;
        expansions += 1;
    }

    // Illinois false position.
    let mut best = if f_lo.abs() <= f_hi.abs() {
        (lo, path_lo.clone())
    } else {
        (hi, path_hi.clone())
    };
    let mut side = 0i8;
    while end(&best.1).abs() > tol {
        if iterations >= MAX_ITERATIONS {
            return Err(Error::ShootingBracket { lo, hi });
        }
        let x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let path = shoot(x)?;
        let fx = end(&path);
        iterations += 1;
        if fx.signum() == f_hi.signum() {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
        best = (x, path);
    }
    let (y0, path) = best;
    Ok(ShootingSolution {
        terminal_residual: end(&path),
        q: path.iter().map(|s| s[0]).collect(),
        y: path.iter().map(|s| s[1]).collect(),
        y0,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Equilibrium;
    use crate::params::{make_grid, validate, NumericalControls};
    use crate::population::adjoint_value;
    use alloc::vec;
    use proptest::prelude::*;

    fn ansatz_gap(p: MarketParams) -> (f64, ShootingSolution, f64) {
        let controls = NumericalControls::default();
        let e = Equilibrium::solve(&p, &controls).unwrap();
        let mf = e.deterministic_mean_path().unwrap();
        let sol = shooting_oracle(&p, &mf.p_br, &mf.m_star, &e.grid, controls.ode_tol).unwrap();
        let y0 = adjoint_value(e.scalar.xi[0], e.scalar.vartheta[0], mf.zeta[0], mf.m_star[0], p.q0);
        ((sol.y0 - y0).abs(), sol, controls.ode_tol)
    }

    #[test]
    fn zero_solution() {
        let p = MarketParams {
            q0: 0.0,
            ..MarketParams::baseline()
        };
        let g = make_grid(1.0, 100).unwrap();
        let z = vec![0.0; 101];
        let s = shooting_oracle(&p, &z, &z, &g, 1e-12).unwrap();
        assert!(s.q.iter().chain(&s.y).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn agrees_with_ansatz_on_baseline() {
        let (gap, sol, tol) = ansatz_gap(MarketParams {
            sigma: 0.0,
            sigma0: 0.0,
            ..MarketParams::baseline()
        });
        assert!(sol.terminal_residual.abs() <= tol);
        assert!(gap <= 10.0 * tol, "{gap}");
    }

    #[test]
    fn grid_mismatch() {
        let p = MarketParams::baseline();
        let g = make_grid(1.0, 10).unwrap();
        assert!(shooting_oracle(&p, &[0.0; 5], &[0.0; 11], &g, 1e-6).is_err());
    }

    fn arb_params() -> impl Strategy<Value = MarketParams> {
        (
            0.01..0.5f64,
            0.1..1.0f64,
            -2.0..2.0f64,
            0.1..1.0f64,
            0.05..1.0f64,
            0.01..0.2f64,
            0.1..1.0f64,
            0.1..1.0f64,
            0.1..1.5f64,
            0.1..1.0f64,
        )
            .prop_map(|(alpha, beta, q0, a, b, c, kappa, rho, lambda, nu)| MarketParams {
                alpha,
                beta,
                q0,
                a,
                b,
                c,
                kappa: kappa.max(0.5 * a * a + 0.01),
                rho: rho.max(0.5 * nu * nu + 0.01),
                lambda,
                nu,
                sigma: 0.0,
                sigma0: 0.0,
                ..MarketParams::baseline()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn agrees_with_ansatz_on_random_sets(p in arb_params()) {
            prop_assume!(validate(&MarketParams { sigma: 0.5, sigma0: 0.2, ..p }).passed());
            let (gap, sol, tol) = ansatz_gap(p);
            prop_assert!(sol.terminal_residual.abs() <= tol);
            prop_assert!(gap <= 10.0 * tol, "gap {}", gap);
        }
    }
}
