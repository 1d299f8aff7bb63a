//! Pluggable execution of independent work items.
//!
//! Transform solves at different Talbot nodes do not interact, so the heat
//! and flux drivers hand them to an [`Executor`]. The core ships only the
//! sequential one; a thread-pool backed executor lives in the command-line
//! crate. Results are always returned in index order, so reductions are
//! deterministic regardless of completion order.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), …, f(count − 1)` and returns the results in order.
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every item on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}
