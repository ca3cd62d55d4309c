use datapricing_core::Executor;
use rayon::prelude::*;

/// Runs independent tasks on a dedicated rayon pool; results keep index order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` uses rayon's default (one worker per core).
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t.max(1));
        }
        Ok(Self { pool: builder.build()? })
    }
}

impl Executor for RayonExecutor {
    fn map_indexed<T, F>(&self, count: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(task).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let e = RayonExecutor::new(Some(3)).unwrap();
        let v = e.map_indexed(100, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }
}
