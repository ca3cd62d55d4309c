//! Equilibrium computation for a three-tier data market: one buyer (leader),
//! one broker (sub-leader) and `n` competing sellers (followers) whose data
//! qualities follow coupled SDEs with idiosyncratic and common noise.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! - [`params`]: model constants, numerical controls, time grids, validation.
//! - [`riccati`]: scalar and matrix Riccati solvers, matrix exponential,
//!   solvability determinants.
//! - [`meanfield`]: the conditional-mean state driven by the common noise,
//!   equilibrium prices and the follower inputs derived from them.
//! - [`population`]: the `n`-seller system under decentralized strategies.
//! - [`objectives`]: payoff functionals and Monte Carlo aggregation.
//! - [`verification`]: empirical checks of consistency rates, Nash gaps and
//!   stationarity of the leaders' prices.
//!
//! IO, file formats and the command line live in the `datapricing` crate.
#![no_std]

extern crate alloc;

pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod meanfield;
pub mod noise;
pub mod numerics;
pub mod objectives;
pub mod params;
pub mod population;
pub mod riccati;
pub mod verification;

pub use equilibrium::Equilibrium;
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use params::{MarketParams, NumericalControls, TimeGrid};
