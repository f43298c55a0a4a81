//! Data-parallel helpers.
//!
//! Every hot loop in the crate goes through these functions. With the
//! `parallel` feature they dispatch to rayon, otherwise they run sequentially.
//! Callers must not depend on evaluation order: results are always collected
//! in input order, so both modes produce identical output.

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Use the rayon thread pool when the `parallel` feature is enabled.
    #[default]
    Parallel,
    /// Always run on the calling thread.
    Sequential,
}

impl Execution {
    /// Whether this mode actually fans out to multiple threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_range<R, F>(mode: Execution, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, collecting results in input order.
pub fn map_slice<T, R, F>(mode: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Returns true if `pred` holds for any index in `0..n`.
pub fn any_range<F>(mode: Execution, n: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().any(pred);
    }
    let _ = mode;
    (0..n).any(pred)
}

/// Sums `f` over `0..n`. Terms are evaluated in parallel but added in index
/// order, so both modes return bit-identical sums.
pub fn sum_range<F>(mode: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_range(mode, n, f).iter().sum()
}
