//! Counter-based splitting of the root seed into independent Brownian streams.
//!
//! Every stream is a ChaCha8 generator keyed by the root seed, with the stream
//! id `kind << 62 | path << 32 | seller`. Streams depend only on
//! `(seed, kind, path, seller)`: the population size, the subcommand and the
//! number of paths do not enter, so samples pair across population sizes and
//! any single seller can be regenerated in isolation.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::params::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Common = 0,
    Seller = 1,
    /// The representative agent used by the leaders' auxiliary problems.
    Representative = 2,
}

pub fn stream_id(kind: StreamKind, path: u32, seller: u32) -> u64 {
    debug_assert!(path < (1 << 30));
    ((kind as u64) << 62) | ((u64::from(path) & 0x3fff_ffff) << 32) | u64::from(seller)
}

pub fn stream_rng(seed: u64, kind: StreamKind, path: u32, seller: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(kind, path, seller));
    rng
}

/// `count` Brownian increments with variance `dt`.
pub fn brownian_increments(seed: u64, kind: StreamKind, path: u32, seller: u32, count: usize, dt: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, kind, path, seller);
    let scale = libm::sqrt(dt);
    (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect()
}

/// One realisation of the common noise `W⁰` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonNoisePath {
    pub grid: TimeGrid,
    pub increments: Vec<f64>,
    pub seed: u64,
    pub path: u32,
}

impl CommonNoisePath {
    pub fn generate(seed: u64, path: u32, grid: &TimeGrid) -> Self {
        Self {
            increments: brownian_increments(seed, StreamKind::Common, path, 0, grid.n_steps(), grid.dt()),
            grid: grid.clone(),
            seed,
            path,
        }
    }

    /// All increments zero; the tag is kept for reporting only.
    pub fn zero(grid: &TimeGrid) -> Self {
        Self {
            increments: alloc::vec![0.0; grid.n_steps()],
            grid: grid.clone(),
            seed: 0,
            path: 0,
        }
    }

    /// The same Brownian path observed on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.grid.n_steps().is_multiple_of(factor) {
            return Err(Error::InvalidGrid("coarsening factor must divide n_steps"));
        }
        let grid = TimeGrid::new(self.grid.horizon(), self.grid.n_steps() / factor)?;
        let increments = self.increments.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(Self {
            grid,
            increments,
            seed: self.seed,
            path: self.path,
        })
    }

    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.increments.len() != grid.n_steps() {
            return Err(Error::GridMismatch {
                expected: grid.n_steps(),
                got: self.increments.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_grid;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = brownian_increments(42, StreamKind::Seller, 3, 7, 64, 0.01);
        let b = brownian_increments(42, StreamKind::Seller, 3, 7, 64, 0.01);
        let c = brownian_increments(42, StreamKind::Seller, 3, 8, 64, 0.01);
        let d = brownian_increments(42, StreamKind::Common, 3, 7, 64, 0.01);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn prefix_property() {
        // Longer draws extend shorter ones, so a seller's noise does not
        // depend on how many other streams exist.
        let short = brownian_increments(1, StreamKind::Seller, 0, 0, 10, 1.0);
        let long = brownian_increments(1, StreamKind::Seller, 0, 0, 20, 1.0);
        assert_eq!(short[..], long[..10]);
    }

    #[test]
    fn increments_have_the_right_variance() {
        let dt = 0.004;
        let v = brownian_increments(9, StreamKind::Common, 0, 0, 200_000, dt);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
        assert!(m.abs() < 4.0 * libm::sqrt(dt / 200_000.0));
        assert!((var / dt - 1.0).abs() < 0.02);
    }

    #[test]
    fn coarsening_sums_increments() {
        let g = make_grid(1.0, 8).unwrap();
        let w = CommonNoisePath::generate(5, 2, &g);
        let c = w.coarsen(4).unwrap();
        assert_eq!(c.increments.len(), 2);
        assert_eq!(c.increments[0], w.increments[..4].iter().sum::<f64>());
        assert!(w.coarsen(3).is_err());
    }
}
