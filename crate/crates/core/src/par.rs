//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the callers may ask for rayon; without it every
//! helper runs sequentially and the `parallel` flag is ignored. Results never
//! depend on the flag.

/// Whether parallel execution is compiled in.
pub const AVAILABLE: bool = cfg!(feature = "parallel");

/// Smallest `i < count` with `pred(i)`.
pub fn find_first<F>(count: u64, parallel: bool, pred: F) -> Option<u64>
where
    F: Fn(u64) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().find_first(|&i| pred(i));
    }
    let _ = parallel;
    (0..count).find(|&i| pred(i))
}

/// `(0..n).map(f).collect()`, optionally spread over the rayon pool.
pub fn map_range<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}
