//! Model constants, numerical controls and the uniform time grid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// The fourteen constants of the market model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Mean-reversion speed of each seller's quality toward the market average.
    pub alpha: f64,
    /// Effect of one unit of adjustment effort on quality.
    pub beta: f64,
    /// Idiosyncratic volatility.
    pub sigma: f64,
    /// Common-noise volatility.
    pub sigma0: f64,
    /// Initial quality of every seller.
    pub q0: f64,
    /// Seller quantity-quality coefficient.
    pub a: f64,
    /// Marginal quality cost.
    pub b: f64,
    /// Adjustment effort cost.
    pub c: f64,
    /// Broker manufacturing cost.
    pub kappa: f64,
    /// Buyer's quadratic aversion to uneven quality.
    pub rho: f64,
    /// Buyer's linear utility of quality.
    pub lambda: f64,
    /// Product quantity-quality coefficient.
    pub nu: f64,
    /// Time horizon `T`.
    pub horizon: f64,
    /// Number of sellers.
    pub n: usize,
}

/// Names accepted by [`MarketParams::get`] and [`MarketParams::set`], in
/// parameter-file order.
pub const FIELD_NAMES: [&str; 14] = [
    "alpha", "beta", "sigma", "sigma0", "q0", "a", "b", "c", "kappa", "rho", "lambda", "nu", "T", "n",
];

impl MarketParams {
    /// The illustrative parameter set used throughout the numerical study.
    pub const fn baseline() -> Self {
        Self {
            alpha: 0.12,
            beta: 0.4,
            sigma: 0.5,
            sigma0: 0.2,
            q0: -1.0,
            a: 0.5,
            b: 0.4,
            c: 0.03,
            kappa: 0.3,
            rho: 0.25,
            lambda: 0.6,
            nu: 0.7,
            horizon: 1.0,
            n: 30,
        }
    }

    /// `β² / 2c`, the gain from the adjoint to the quality drift.
    #[inline]
    pub fn effort_gain(&self) -> f64 {
        self.beta * self.beta / (2.0 * self.c)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "alpha" => self.alpha,
            "beta" => self.beta,
            "sigma" => self.sigma,
            "sigma0" => self.sigma0,
            "q0" => self.q0,
            "a" => self.a,
            "b" => self.b,
            "c" => self.c,
            "kappa" => self.kappa,
            "rho" => self.rho,
            "lambda" => self.lambda,
            "nu" => self.nu,
            "T" => self.horizon,
            "n" => self.n as f64,
            _ => return None,
        })
    }

    /// Sets a field by name. `n` must be a non-negative integer value.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "sigma" => &mut self.sigma,
            "sigma0" => &mut self.sigma0,
            "q0" => &mut self.q0,
            "a" => &mut self.a,
            "b" => &mut self.b,
            "c" => &mut self.c,
            "kappa" => &mut self.kappa,
            "rho" => &mut self.rho,
            "lambda" => &mut self.lambda,
            "nu" => &mut self.nu,
            "T" => &mut self.horizon,
            "n" => {
                if !(value.is_finite() && value >= 0.0 && value == libm::trunc(value)) {
                    return Err(Error::InvalidParams(format!("n must be an integer, got {value}")));
                }
                self.n = value as usize;
                return Ok(());
            }
            _ => return Err(Error::InvalidParams(format!("unknown parameter `{name}`"))),
        };
        *slot = value;
        Ok(())
    }
}

impl Default for MarketParams {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Discretization and Monte Carlo controls shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalControls {
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub ode_tol: f64,
    pub det_floor: f64,
}

impl Default for NumericalControls {
    fn default() -> Self {
        Self {
            n_steps: 1000,
            n_paths: 256,
            seed: 42,
            ode_tol: 1e-6,
            det_floor: 1e-10,
        }
    }
}

impl NumericalControls {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::InvalidParams(format!(
                "n_steps must be >= 2, got {}",
                self.n_steps
            )));
        }
        if self.n_paths < 1 {
            return Err(Error::InvalidParams("n_paths must be >= 1".into()));
        }
        if !(self.ode_tol > 0.0 && self.ode_tol.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "ode_tol must be > 0, got {}",
                self.ode_tol
            )));
        }
        if !(self.det_floor >= 0.0 && self.det_floor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "det_floor must be >= 0, got {}",
                self.det_floor
            )));
        }
        Ok(())
    }
}

/// Uniform grid `t_k = k T / n_steps`, `k = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid("horizon must be positive and finite"));
        }
        if n_steps < 2 {
            return Err(Error::InvalidGrid("at least two steps are required"));
        }
        let steps = n_steps as f64;
        let mut points: Vec<f64> = (0..=n_steps).map(|k| k as f64 * horizon / steps).collect();
        points[n_steps] = horizon;
        Ok(Self {
            horizon,
            n_steps,
            points,
        })
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points, `n_steps + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    #[inline]
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.points[k]
    }

    /// Index `k` of the interval `[t_k, t_{k+1}]` containing `t` (clamped) and
    /// the fractional position of `t` inside it.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let x = t / self.dt();
        let k = if x <= 0.0 {
            0
        } else {
            (libm::floor(x) as usize).min(self.n_steps - 1)
        };
        (k, (t - self.points[k]) / self.dt())
    }

    /// Linear interpolation of grid-sampled `values` at time `t`.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let (k, s) = self.locate(t);
        values[k] + s * (values[k + 1] - values[k])
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }
}

pub fn make_grid(horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, n_steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    /// Holds with equality: accepted, but the related quadratic form is only
    /// semi-definite.
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub message: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Checks every parameter invariant. Riccati solvability is not part of this
/// report; see [`crate::riccati::solvability_check`].
pub fn validate(p: &MarketParams) -> ValidationReport {
    let mut checks = Vec::new();
    let positive = [
        ("alpha", p.alpha),
        ("beta", p.beta),
        ("sigma", p.sigma),
        ("sigma0", p.sigma0),
        ("a", p.a),
        ("b", p.b),
        ("c", p.c),
        ("kappa", p.kappa),
        ("rho", p.rho),
        ("lambda", p.lambda),
        ("nu", p.nu),
        ("T", p.horizon),
    ];
    for (name, value) in positive {
        let (status, message) = if !value.is_finite() {
            (CheckStatus::Fail, format!("{name} is not finite ({value})"))
        } else if value > 0.0 {
            (CheckStatus::Pass, format!("{name} = {value} > 0"))
        } else {
            (CheckStatus::Fail, format!("{name} = {value} must be strictly positive"))
        };
        checks.push(Check {
            name: format!("{name}_positive"),
            status,
            message,
        });
    }

    checks.push(if p.q0.is_finite() {
        Check {
            name: "q0_finite".into(),
            status: CheckStatus::Pass,
            message: format!("q0 = {}", p.q0),
        }
    } else {
        Check {
            name: "q0_finite".into(),
            status: CheckStatus::Fail,
            message: format!("q0 is not finite ({})", p.q0),
        }
    });

    checks.push(Check {
        name: "n_at_least_two".into(),
        status: if p.n >= 2 { CheckStatus::Pass } else { CheckStatus::Fail },
        message: format!("n = {}", p.n),
    });

    checks.push(concavity(
        "broker_concavity",
        "2*kappa",
        2.0 * p.kappa,
        "a^2",
        p.a * p.a,
    ));
    checks.push(concavity("buyer_concavity", "2*rho", 2.0 * p.rho, "nu^2", p.nu * p.nu));

    ValidationReport { checks }
}

fn concavity(name: &str, lhs_name: &str, lhs: f64, rhs_name: &str, rhs: f64) -> Check {
    let (status, message) = if !(lhs.is_finite() && rhs.is_finite()) {
        (CheckStatus::Fail, format!("{lhs_name} or {rhs_name} is not finite"))
    } else if lhs > rhs {
        (CheckStatus::Pass, format!("{lhs_name} = {lhs} > {rhs_name} = {rhs}"))
    } else if lhs == rhs {
        (
            CheckStatus::Warn,
            format!("{lhs_name} = {rhs_name} = {lhs}: objective only semi-definite"),
        )
    } else {
        (CheckStatus::Fail, format!("{lhs_name} = {lhs} < {rhs_name} = {rhs}"))
    };
    Check {
        name: name.into(),
        status,
        message,
    }
}
