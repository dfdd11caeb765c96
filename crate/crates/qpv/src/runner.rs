//! Thread-pool implementation of the restart runner.

use std::ops::Range;

use qpv_core::multistart::RestartRunner;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Spreads each batch of restarts over a rayon pool. Results come back in
/// index order, so the outcome does not depend on the worker count.
pub struct RayonRunner {
    pool: ThreadPool,
}

impl RayonRunner {
    /// `threads == 0` uses one worker per available CPU.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl RestartRunner for RayonRunner {
    fn map_range<T, F>(&self, indices: Range<u64>, f: &F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        let start = indices.start;
        let len = indices.end.saturating_sub(start) as usize;
        self.pool
            .install(|| (0..len).into_par_iter().map(|i| f(start + i as u64)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_index_order() {
        let r = RayonRunner::new(3).unwrap();
        let v = r.map_range(10..50, &|i| i * i);
        assert_eq!(v, (10..50u64).map(|i| i * i).collect::<Vec<_>>());
    }
}
