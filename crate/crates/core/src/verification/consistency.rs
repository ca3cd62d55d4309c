use alloc::vec::Vec;

use super::{check_sizes, scaling_fit, Estimate, ScalingReport};
use crate::equilibrium::Equilibrium;
use crate::error::Result;
use crate::exec::Executor;
use crate::numerics::mean_and_se;
use crate::population::{simulate_population_with, SellerStreams};

/// Monte Carlo estimate of `E[max_k |Q̄⁽ⁿ⁾_k - m*_k|²]` for each `n`, with
/// the same common-noise and seller streams reused across population sizes,
/// and the log-log rate fit.
pub fn consistency_gap<E: Executor>(
    eq: &Equilibrium,
    n_values: &[usize],
    n_paths: usize,
    exec: &E,
) -> Result<ScalingReport> {
    check_sizes(n_values)?;
    let per_path: Vec<Result<Vec<f64>>> = exec.map_indexed(n_paths, |path| {
        let noise = eq.common_noise(path as u32);
        let mf = eq.mean_path(&noise)?;
        n_values
            .iter()
            .map(|&n| {
                let p = crate::MarketParams { n, ..eq.params };
                let pop = simulate_population_with(&p, &eq.scalar, &mf, &noise, 0, SellerStreams::Default)?;
                Ok(pop
                    .q_bar_n
                    .iter()
                    .zip(&mf.m_star)
                    .map(|(q, m)| (q - m) * (q - m))
                    .fold(0.0, f64::max))
            })
            .collect()
    });
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;
    let cells: Vec<Vec<f64>> = (0..n_values.len())
        .map(|i| per_path.iter().map(|row| row[i]).collect())
        .collect();
    let gaps = cells
        .iter()
        .map(|c| mean_and_se(c).map(|(mean, std_error)| Estimate { mean, std_error }))
        .collect::<Result<Vec<_>>>()?;
    scaling_fit(n_values, gaps, cells, 0.0, Vec::new())
}
