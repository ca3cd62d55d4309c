//! Payoff functionals evaluated along simulated paths, and their Monte Carlo
//! aggregation. All time integrals use the trapezoid rule.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{mean_and_se, trapezoid};
use crate::params::MarketParams;
use crate::population::PopulationPath;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalId {
    /// Seller `i` (zero-based).
    Follower(usize),
    Broker,
    Leader,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub functional: FunctionalId,
}

pub fn aggregate(values: &[f64], functional: FunctionalId) -> Result<PayoffEstimate> {
    let (mean, std_error) = mean_and_se(values)?;
    Ok(PayoffEstimate {
        mean,
        std_error,
        n_samples: values.len(),
        functional,
    })
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::GridMismatch { expected, got });
    }
    Ok(())
}

/// `∫ (a p_br Q - b/2 Q² - c τ²) dt` for one seller's quality and effort.
pub fn follower_integral(q: &[f64], tau: &[f64], p_br: &[f64], p: &MarketParams, dt: f64) -> Result<f64> {
    check_len(q.len(), tau.len())?;
    check_len(q.len(), p_br.len())?;
    let integrand: Vec<f64> = q
        .iter()
        .zip(tau)
        .zip(p_br)
        .map(|((&q, &t), &pr)| p.a * pr * q - 0.5 * p.b * q * q - p.c * t * t)
        .collect();
    Ok(trapezoid(&integrand, dt))
}

pub fn follower_payoff(i: usize, pop: &PopulationPath, p_br: &[f64], p: &MarketParams) -> Result<f64> {
    follower_integral(pop.q_row(i)?, pop.tau_row(i)?, p_br, p, pop.grid.dt())
}

/// `∫ (p_bu ν Q̄ - a p_br Q̄ - κ mean(Q²) - p_br²/2) dt`.
pub fn broker_payoff(pop: &PopulationPath, p_bu: &[f64], p_br: &[f64], p: &MarketParams) -> Result<f64> {
    let len = pop.grid.len();
    check_len(len, p_bu.len())?;
    check_len(len, p_br.len())?;
    let integrand: Vec<f64> = (0..len)
        .map(|k| {
            let (qb, q2) = (pop.q_bar_n[k], pop.q_sq_bar_n[k]);
            p_bu[k] * p.nu * qb - p_br[k] * p.a * qb - p.kappa * q2 - 0.5 * p_br[k] * p_br[k]
        })
        .collect();
    Ok(trapezoid(&integrand, pop.grid.dt()))
}

/// `∫ (-p_bu²/2 + λ Q̄ - ρ mean(Q²) - p_bu ν Q̄) dt`.
pub fn leader_payoff(pop: &PopulationPath, p_bu: &[f64], p: &MarketParams) -> Result<f64> {
    let len = pop.grid.len();
    check_len(len, p_bu.len())?;
    let integrand: Vec<f64> = (0..len)
        .map(|k| {
            let (qb, q2) = (pop.q_bar_n[k], pop.q_sq_bar_n[k]);
            -0.5 * p_bu[k] * p_bu[k] + p.lambda * qb - p.rho * q2 - p_bu[k] * p.nu * qb
        })
        .collect();
    Ok(trapezoid(&integrand, pop.grid.dt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_grid;
    use alloc::vec;

    fn constant_population(n: usize, steps: usize, q: f64, tau: f64) -> PopulationPath {
        let grid = make_grid(1.0, steps).unwrap();
        let len = grid.len();
        PopulationPath {
            grid,
            n,
            stored: n,
            q: vec![q; n * len],
            q_hat: vec![q; n * len],
            tau: vec![tau; n * len],
            q_bar_n: vec![q; len],
            q_hat_bar_n: vec![q; len],
            tau_bar_n: vec![tau; len],
            q_sq_bar_n: vec![q * q; len],
            tau_abs_bar_n: vec![tau.abs(); len],
            seed: 0,
            path: 0,
        }
    }

    #[test]
    fn zero_inputs_give_zero() {
        let p = MarketParams::baseline();
        let pop = constant_population(3, 10, 0.0, 0.0);
        let z = vec![0.0; 11];
        assert_eq!(follower_payoff(0, &pop, &z, &p).unwrap(), 0.0);
        assert_eq!(broker_payoff(&pop, &z, &z, &p).unwrap(), 0.0);
        assert_eq!(leader_payoff(&pop, &z, &p).unwrap(), 0.0);
    }

    #[test]
    fn constant_path_values() {
        let p = MarketParams::baseline();
        let pop = constant_population(3, 10, -1.0, 0.0);
        let z = vec![0.0; 11];
        assert!((follower_payoff(1, &pop, &z, &p).unwrap() + 0.2).abs() < 1e-14);
        assert!((broker_payoff(&pop, &z, &z, &p).unwrap() + 0.3).abs() < 1e-14);
        assert!((leader_payoff(&pop, &z, &p).unwrap() + 0.85).abs() < 1e-14);
        assert_eq!(
            follower_payoff(3, &pop, &z, &p),
            Err(Error::SellerOutOfRange { index: 3, n: 3 })
        );
    }

    #[test]
    fn payment_cancels_between_broker_and_leader() {
        let p = MarketParams::baseline();
        let mut pop = constant_population(2, 20, -0.7, 0.1);
        for (k, v) in pop.q_bar_n.iter_mut().enumerate() {
            *v = -0.7 + 0.01 * k as f64;
        }
        let p_bu: Vec<f64> = (0..21).map(|k| 0.3 - 0.02 * k as f64).collect();
        let p_br: Vec<f64> = (0..21).map(|k| 0.1 + 0.01 * k as f64).collect();
        let sum = broker_payoff(&pop, &p_bu, &p_br, &p).unwrap() + leader_payoff(&pop, &p_bu, &p).unwrap();
        let rest: Vec<f64> = (0..21)
            .map(|k| {
                let (qb, q2) = (pop.q_bar_n[k], pop.q_sq_bar_n[k]);
                -p_br[k] * p.a * qb - p.kappa * q2 - 0.5 * p_br[k] * p_br[k] - 0.5 * p_bu[k] * p_bu[k] + p.lambda * qb
                    - p.rho * q2
            })
            .collect();
        assert!((sum - trapezoid(&rest, pop.grid.dt())).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_is_second_order_on_smooth_paths() {
        let p = MarketParams::baseline();
        let value = |steps: usize| {
            let g = make_grid(1.0, steps).unwrap();
            let q: Vec<f64> = g.points().iter().map(|t| libm::sin(3.0 * t) - 1.0).collect();
            let tau: Vec<f64> = g.points().iter().map(|t| libm::cos(2.0 * t)).collect();
            let pr: Vec<f64> = g.points().iter().map(|t| 0.2 * t).collect();
            follower_integral(&q, &tau, &pr, &p, g.dt()).unwrap()
        };
        let (a, b, c) = (value(50), value(100), value(200));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn aggregate_examples() {
        let e = aggregate(&[2.5], FunctionalId::Leader).unwrap();
        assert_eq!((e.mean, e.std_error, e.n_samples), (2.5, 0.0, 1));
        let e = aggregate(&[1.0, -1.0], FunctionalId::Broker).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 1.0));
        assert_eq!(aggregate(&[], FunctionalId::Broker), Err(Error::EmptySample));
    }

    #[test]
    fn standard_error_halves_with_four_times_the_samples() {
        use crate::noise::{brownian_increments, StreamKind};
        let small = brownian_increments(5, StreamKind::Common, 0, 0, 2000, 1.0);
        let large = brownian_increments(5, StreamKind::Common, 1, 0, 8000, 1.0);
        let a = aggregate(&small, FunctionalId::Broker).unwrap();
        let b = aggregate(&large, FunctionalId::Broker).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((ratio - 2.0).abs() < 0.6, "{ratio}");
    }
}
