//! Execution strategy for independent Monte Carlo tasks.
//!
//! The core crate never spawns threads. Callers that want parallelism supply
//! an [`Executor`] (the `datapricing` crate provides a rayon-backed one). Every
//! executor must return results in index order so that downstream reductions
//! are independent of scheduling.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `task(0), task(1), ..., task(count - 1)` and returns the
    /// results in index order.
    fn map_indexed<T, F>(&self, count: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs tasks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, count: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(task).collect()
    }
}
