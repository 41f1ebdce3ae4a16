//! Data-parallel map helpers.
//!
//! With the `parallel` feature (default) the generic entry points fan out over
//! rayon's global pool; without it they run on the calling thread. Results are
//! always returned in input order, so output is identical either way.

/// Sequential map over a slice.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Rayon map over a slice, preserving input order.
#[cfg(feature = "parallel")]
pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Order-preserving map; parallel when the `parallel` feature is enabled.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_par(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(items, f)
    }
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
