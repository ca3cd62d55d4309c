//! The `n`-seller system under the decentralized strategies.
//!
//! Seller `i` carries an auxiliary quality `Q̂ⁱ` that drives its strategy and
//! reverts to `m*`, and an actual quality `Qⁱ` that reverts to the empirical
//! mean `Q̄⁽ⁿ⁾` and enters payoffs. Both see `σ dWⁱ + σ₀ dW⁰`.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::meanfield::MeanFieldPath;
use crate::noise::{stream_rng, CommonNoisePath, StreamKind};
use crate::numerics::exact_mean;
use crate::params::{MarketParams, TimeGrid};
use crate::riccati::ScalarRiccatiTable;

/// `τ = (β/2c) (ξ (q̂ - m) + ϑ m + ζ)`.
#[inline]
pub fn seller_feedback(xi: f64, vartheta: f64, zeta: f64, m: f64, q_hat: f64, p: &MarketParams) -> f64 {
    p.beta / (2.0 * p.c) * adjoint_value(xi, vartheta, zeta, m, q_hat)
}

/// `Ŷ = ξ (q̂ - m) + ϑ m + ζ`.
#[inline]
pub fn adjoint_value(xi: f64, vartheta: f64, zeta: f64, m: f64, q_hat: f64) -> f64 {
    xi * (q_hat - m) + vartheta * m + zeta
}

/// One Euler–Maruyama step of an actual quality under effort `tau`.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn seller_quality_step(q: f64, q_bar_n: f64, tau: f64, p: &MarketParams, dt: f64, dw: f64, dw0: f64) -> f64 {
    q + (p.alpha * (q_bar_n - q) + p.beta * tau) * dt + p.sigma * dw + p.sigma0 * dw0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationPath {
    pub grid: TimeGrid,
    pub n: usize,
    /// Number of sellers whose paths are stored (the first `stored`).
    pub stored: usize,
    /// Seller-major, `stored × (n_steps + 1)`.
    pub q: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub tau: Vec<f64>,
    /// Empirical mean of `Q` over all `n` sellers.
    pub q_bar_n: Vec<f64>,
    /// Empirical mean of `Q̂` over all `n` sellers.
    pub q_hat_bar_n: Vec<f64>,
    /// Empirical mean of `τ` over all `n` sellers.
    pub tau_bar_n: Vec<f64>,
    /// Empirical mean of `Q²` over all `n` sellers.
    pub q_sq_bar_n: Vec<f64>,
    /// Empirical mean of `|τ|` over all `n` sellers.
    pub tau_abs_bar_n: Vec<f64>,
    pub seed: u64,
    pub path: u32,
}

impl PopulationPath {
    fn row<'a>(&self, v: &'a [f64], i: usize) -> Result<&'a [f64]> {
        if i >= self.stored {
            return Err(Error::SellerOutOfRange {
                index: i,
                n: self.stored,
            });
        }
        let len = self.grid.len();
        Ok(&v[i * len..(i + 1) * len])
    }

    pub fn q_row(&self, i: usize) -> Result<&[f64]> {
        self.row(&self.q, i)
    }

    pub fn q_hat_row(&self, i: usize) -> Result<&[f64]> {
        self.row(&self.q_hat, i)
    }

    pub fn tau_row(&self, i: usize) -> Result<&[f64]> {
        self.row(&self.tau, i)
    }
}

/// Which seller streams to use. `Default` maps seller `i` to stream `i`;
/// tests permute the mapping to check exchangeability.
#[derive(Debug, Clone, Copy)]
pub enum SellerStreams<'a> {
    Default,
    Mapped(&'a [u32]),
}

impl SellerStreams<'_> {
    fn stream(&self, i: usize) -> u32 {
        match self {
            SellerStreams::Default => i as u32,
            SellerStreams::Mapped(m) => m[i],
        }
    }
}

pub(crate) fn seller_rngs(seed: u64, path: u32, n: usize, streams: SellerStreams<'_>) -> Vec<ChaCha8Rng> {
    (0..n)
        .map(|i| stream_rng(seed, StreamKind::Seller, path, streams.stream(i)))
        .collect()
}

/// Simulates all `n` sellers, storing every path.
pub fn simulate_population(
    p: &MarketParams,
    scalar: &ScalarRiccatiTable,
    mf: &MeanFieldPath,
    noise: &CommonNoisePath,
) -> Result<PopulationPath> {
    simulate_population_with(p, scalar, mf, noise, p.n, SellerStreams::Default)
}

/// Simulates all `n` sellers but stores only the first `keep` paths.
pub fn simulate_population_with(
    p: &MarketParams,
    scalar: &ScalarRiccatiTable,
    mf: &MeanFieldPath,
    noise: &CommonNoisePath,
    keep: usize,
    streams: SellerStreams<'_>,
) -> Result<PopulationPath> {
    let n = p.n;
    if n < 2 {
        return Err(Error::TooFewSellers(n));
    }
    let grid = &mf.grid;
    grid.check_len(scalar.xi.len())?;
    noise.check_grid(grid)?;
    if mf.noise_tag.is_some_and(|t| t != (noise.seed, noise.path)) {
        return Err(Error::InvalidParams(
            "mean-field path and population use different common noise".into(),
        ));
    }
    let keep = keep.min(n);
    let len = grid.len();
    let steps = grid.n_steps();
    let dt = grid.dt();
    let sqrt_dt = libm::sqrt(dt);
    let gain = p.effort_gain();
    let tau_scale = p.beta / (2.0 * p.c);

    let mut rngs = seller_rngs(noise.seed, noise.path, n, streams);
    let mut q = vec![p.q0; n];
    let mut q_hat = vec![p.q0; n];
    let mut tau = vec![0.0; n];
    let mut scratch = vec![0.0; n];

    let mut out = PopulationPath {
        grid: grid.clone(),
        n,
        stored: keep,
        q: vec![0.0; keep * len],
        q_hat: vec![0.0; keep * len],
        tau: vec![0.0; keep * len],
        q_bar_n: Vec::with_capacity(len),
        q_hat_bar_n: Vec::with_capacity(len),
        tau_bar_n: Vec::with_capacity(len),
        q_sq_bar_n: Vec::with_capacity(len),
        tau_abs_bar_n: Vec::with_capacity(len),
        seed: noise.seed,
        path: noise.path,
    };

    for k in 0..=steps {
        let (xi, th, ze, m) = (scalar.xi[k], scalar.vartheta[k], mf.zeta[k], mf.m_star[k]);
        for i in 0..n {
            tau[i] = tau_scale * adjoint_value(xi, th, ze, m, q_hat[i]);
        }
        let mean = |v: &[f64]| exact_mean(v).ok_or(Error::Diverged { step: k });
        let q_bar = mean(&q)?;
        out.q_bar_n.push(q_bar);
        out.q_hat_bar_n.push(mean(&q_hat)?);
        out.tau_bar_n.push(mean(&tau)?);
        for (s, v) in scratch.iter_mut().zip(&q) {
            *s = v * v;
        }
        out.q_sq_bar_n.push(mean(&scratch)?);
        for (s, v) in scratch.iter_mut().zip(&tau) {
            *s = v.abs();
        }
        out.tau_abs_bar_n.push(mean(&scratch)?);
        for i in 0..keep {
            out.q[i * len + k] = q[i];
            out.q_hat[i * len + k] = q_hat[i];
            out.tau[i * len + k] = tau[i];
        }
        if k == steps {
            break;
        }
        let dw0 = noise.increments[k];
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut rngs[i]);
            let dw = z * sqrt_dt;
            let y_hat = adjoint_value(xi, th, ze, m, q_hat[i]);
            debug_assert!(
                (p.beta * tau[i] - gain * y_hat).abs() <= 1e-12 * (1.0 + (gain * y_hat).abs()),
                "drift mismatch"
            );
            q_hat[i] += (p.alpha * (m - q_hat[i]) + gain * y_hat) * dt + p.sigma * dw + p.sigma0 * dw0;
            q[i] = seller_quality_step(q[i], q_bar, tau[i], p, dt, dw, dw0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Equilibrium;
    use crate::params::NumericalControls;

    fn eq(p: MarketParams, steps: usize) -> Equilibrium {
        let c = NumericalControls {
            n_steps: steps,
            ..NumericalControls::default()
        };
        Equilibrium::solve(&p, &c).unwrap()
    }

    fn run(e: &Equilibrium, path: u32) -> PopulationPath {
        let w = e.common_noise(path);
        let mf = e.mean_path(&w).unwrap();
        simulate_population(&e.params, &e.scalar, &mf, &w).unwrap()
    }

    #[test]
    fn feedback_examples() {
        let p = MarketParams::baseline();
        assert_eq!(seller_feedback(0.0, 0.0, 0.0, 1.3, -0.7, &p), 0.0);
        let a = seller_feedback(-0.4, 0.2, 0.1, 0.5, 0.5, &p);
        let b = seller_feedback(-9.0, 0.2, 0.1, 0.5, 0.5, &p);
        assert_eq!(a, b);
        assert!((a - p.beta / (2.0 * p.c) * (0.2 * 0.5 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn zero_fixed_point() {
        let p = MarketParams {
            sigma: 0.0,
            sigma0: 0.0,
            q0: 0.0,
            lambda: 0.0,
            ..MarketParams::baseline()
        };
        let pop = run(&eq(p, 100), 0);
        assert!(pop.q.iter().chain(&pop.q_hat).chain(&pop.tau).all(|&v| v == 0.0));
    }

    #[test]
    fn two_sellers_one_step() {
        let p = MarketParams {
            n: 2,
            sigma: 0.0,
            sigma0: 0.0,
            ..MarketParams::baseline()
        };
        let e = eq(p, 10);
        let pop = run(&e, 0);
        let mf = e.mean_path(&e.common_noise(0)).unwrap();
        let tau0 = p.beta / (2.0 * p.c) * (e.scalar.vartheta[0] * p.q0 + mf.zeta[0]);
        let expected = p.q0 + p.beta * tau0 * e.grid.dt();
        assert_eq!(pop.tau_row(0).unwrap()[0], tau0);
        assert!((pop.q_row(0).unwrap()[1] - expected).abs() < 1e-15);
        assert!((pop.q_row(1).unwrap()[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn invariants_hold() {
        let p = MarketParams {
            n: 7,
            ..MarketParams::baseline()
        };
        let e = eq(p, 200);
        let w = e.common_noise(3);
        let mf = e.mean_path(&w).unwrap();
        let pop = simulate_population(&p, &e.scalar, &mf, &w).unwrap();
        let len = e.grid.len();
        for i in 0..p.n {
            assert_eq!(pop.q_row(i).unwrap()[0], p.q0);
            assert_eq!(pop.q_hat_row(i).unwrap()[0], p.q0);
        }
        for k in 0..len {
            let qs: Vec<f64> = (0..p.n).map(|i| pop.q[i * len + k]).collect();
            assert_eq!(pop.q_bar_n[k], exact_mean(&qs).unwrap());
            // Mean reversion toward the empirical mean cancels in the average.
            let net: f64 = qs.iter().map(|q| p.alpha * (pop.q_bar_n[k] - q)).sum();
            assert!(net.abs() < 1e-12);
            for i in 0..p.n {
                let expected = seller_feedback(
                    e.scalar.xi[k],
                    e.scalar.vartheta[k],
                    mf.zeta[k],
                    mf.m_star[k],
                    pop.q_hat[i * len + k],
                    &p,
                );
                assert_eq!(pop.tau[i * len + k], expected);
            }
        }
        assert!(pop.q_row(7).is_err());
    }

    #[test]
    fn noiseless_sellers_coincide() {
        let p = MarketParams {
            n: 5,
            sigma: 0.0,
            sigma0: 0.0,
            ..MarketParams::baseline()
        };
        let pop = run(&eq(p, 100), 1);
        let len = pop.grid.len();
        for i in 1..5 {
            assert_eq!(pop.q[i * len..(i + 1) * len], pop.q[..len]);
        }
    }

    #[test]
    fn permuting_streams_permutes_paths() {
        let p = MarketParams {
            n: 5,
            ..MarketParams::baseline()
        };
        let e = eq(p, 100);
        let w = e.common_noise(2);
        let mf = e.mean_path(&w).unwrap();
        let a = simulate_population_with(&p, &e.scalar, &mf, &w, 5, SellerStreams::Default).unwrap();
        let perm = [3u32, 0, 4, 1, 2];
        let b = simulate_population_with(&p, &e.scalar, &mf, &w, 5, SellerStreams::Mapped(&perm)).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            assert_eq!(b.q_row(i).unwrap(), a.q_row(j as usize).unwrap());
            assert_eq!(b.tau_row(i).unwrap(), a.tau_row(j as usize).unwrap());
        }
        assert_eq!(a.q_bar_n, b.q_bar_n);
    }

    #[test]
    fn partial_storage_matches_full() {
        let p = MarketParams::baseline();
        let e = eq(p, 100);
        let w = e.common_noise(0);
        let mf = e.mean_path(&w).unwrap();
        let full = simulate_population(&p, &e.scalar, &mf, &w).unwrap();
        let lean = simulate_population_with(&p, &e.scalar, &mf, &w, 2, SellerStreams::Default).unwrap();
        assert_eq!(lean.q_row(1).unwrap(), full.q_row(1).unwrap());
        assert_eq!(lean.q_bar_n, full.q_bar_n);
        assert!(lean.q_row(2).is_err());
    }

    #[test]
    fn rejects_mismatched_noise_and_tiny_populations() {
        let p = MarketParams::baseline();
        let e = eq(p, 50);
        let mf = e.mean_path(&e.common_noise(0)).unwrap();
        assert!(simulate_population(&p, &e.scalar, &mf, &e.common_noise(1)).is_err());
        let one = MarketParams { n: 1, ..p };
        assert_eq!(
            simulate_population(&one, &e.scalar, &mf, &e.common_noise(0)),
            Err(Error::TooFewSellers(1))
        );
    }
}
