//! Scalar Riccati equations of the follower problem.
//!
//! `ξ' = -kξ² + 2αξ + b`, `ϑ' = -kϑ² + αϑ + b` and `φ' = kφ² + 2αφ - b`, all
//! with zero terminal value and `k = β²/2c`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::rk4_backward;
use crate::params::{MarketParams, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRoots {
    pub delta1_plus: f64,
    pub delta1_minus: f64,
    pub delta2_plus: f64,
    pub delta2_minus: f64,
}

pub fn delta_roots(p: &MarketParams) -> DeltaRoots {
    let bk = p.b * p.effort_gain();
    let r1 = libm::sqrt(p.alpha * p.alpha + bk);
    let r2 = libm::sqrt(0.25 * p.alpha * p.alpha + bk);
    DeltaRoots {
        delta1_plus: -p.alpha + r1,
        delta1_minus: -p.alpha - r1,
        delta2_plus: -0.5 * p.alpha + r2,
        delta2_minus: -0.5 * p.alpha - r2,
    }
}

/// `b (e^{Ds} - 1) / (δ⁻ e^{Ds} - δ⁺)` with `s = T - t`, `D = δ⁺ - δ⁻`,
/// evaluated after dividing through by `e^{Ds}` so large `s` cannot overflow.
fn closed_form_value(b: f64, plus: f64, minus: f64, s: f64, t: f64) -> Result<f64> {
    if b == 0.0 {
        return Ok(0.0);
    }
    let decay = libm::exp(-(plus - minus) * s);
    let numer = -b * libm::expm1(-(plus - minus) * s);
    let denom = minus - plus * decay;
    if denom.abs() < 1e-14 {
        return Err(Error::SingularClosedForm { t });
    }
    Ok(numer / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRiccatiTable {
    pub grid: TimeGrid,
    pub xi: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub phi: Vec<f64>,
    pub roots: DeltaRoots,
    gain: f64,
    alpha: f64,
    b: f64,
}

impl ScalarRiccatiTable {
    /// `β²/2c` for the parameters this table was built from.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn xi_slope(&self, x: f64) -> f64 {
        -self.gain * x * x + 2.0 * self.alpha * x + self.b
    }

    pub fn vartheta_slope(&self, x: f64) -> f64 {
        -self.gain * x * x + self.alpha * x + self.b
    }

    /// `ξ` at half-step index `k2`, midpoints by cubic Hermite interpolation.
    pub fn xi_half(&self, k2: usize) -> f64 {
        self.half(&self.xi, k2, |x| self.xi_slope(x))
    }

    pub fn vartheta_half(&self, k2: usize) -> f64 {
        self.half(&self.vartheta, k2, |x| self.vartheta_slope(x))
    }

    fn half(&self, v: &[f64], k2: usize, slope: impl Fn(f64) -> f64) -> f64 {
        let k = k2 / 2;
        if k2.is_multiple_of(2) {
            v[k]
        } else {
            let (y0, y1) = (v[k], v[k + 1]);
            0.5 * (y0 + y1) + self.grid.dt() / 8.0 * (slope(y0) - slope(y1))
        }
    }
}

/// `ξ` and `ϑ` from the closed form; `φ` from the RK4 oracle.
pub fn scalar_closed_form(p: &MarketParams, grid: &TimeGrid) -> Result<ScalarRiccatiTable> {
    let roots = delta_roots(p);
    let horizon = grid.horizon();
    let mut xi = Vec::with_capacity(grid.len());
    let mut vartheta = Vec::with_capacity(grid.len());
    for &t in grid.points() {
        let s = horizon - t;
        xi.push(closed_form_value(p.b, roots.delta1_plus, roots.delta1_minus, s, t)?);
        vartheta.push(closed_form_value(p.b, roots.delta2_plus, roots.delta2_minus, s, t)?);
    }
    let k = p.effort_gain();
    let phi = scalar_riccati_oracle(k, 2.0 * p.alpha, -p.b, 0.0, grid)?;
    Ok(ScalarRiccatiTable {
        grid: grid.clone(),
        xi,
        vartheta,
        phi,
        roots,
        gain: k,
        alpha: p.alpha,
        b: p.b,
    })
}

/// Backward RK4 for `y' = a2 y² + a1 y + a0` with `y(T) = terminal`.
pub fn scalar_riccati_oracle(a2: f64, a1: f64, a0: f64, terminal: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    rk4_backward(grid, terminal, |_, &y| (a2 * y + a1) * y + a0)
}
