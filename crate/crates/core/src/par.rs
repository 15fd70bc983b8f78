//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `parallel` flag selects rayon;
//! without it every call runs sequentially and the flag is ignored.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with rayon support.
pub const fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}
