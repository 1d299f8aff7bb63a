//! Thread-pool executor for independent Talbot nodes.

use lightning_heat::exec::Executor;
use rayon::prelude::*;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "LHEAT_THREADS";

pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// Builds a pool sized by [`THREADS_ENV`], or rayon's default when unset.
    pub fn from_env() -> anyhow::Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got `{v}`"))?,
            Err(_) => 0,
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Pool { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // Indexed collect keeps results in index order.
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}
