//! Block-parallel execution with a sequential fallback.
//!
//! Every parallel sweep in this crate reads an immutable snapshot and produces
//! one result per block. Results are always returned in ascending block order,
//! and all reductions over blocks happen afterwards in that order, so outputs
//! are bit-identical whichever execution mode is used.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How the independent block tasks of a sweep are dispatched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses the rayon global pool. Without the `parallel` feature this is the
    /// same as `Sequential`.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_blocks<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Fallible version of [`map_blocks`]; the first error in index order wins.
pub fn try_map_blocks<T, E, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_blocks(n, exec, f).into_iter().collect()
}
