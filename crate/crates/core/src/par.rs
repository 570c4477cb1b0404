//! Data-parallel helpers. With the `parallel` feature the loops run on the
//! rayon pool; without it they run in order on the calling thread. Results
//! are identical either way because every output element is computed
//! independently of the split.

/// Below this many items the work stays on the calling thread.
pub const MIN_PARALLEL_LEN: usize = 256;

#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if n < MIN_PARALLEL_LEN {
        return (0..n).map(f).collect();
    }
    (0..n).into_par_iter().with_min_len(64).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Like [`map_range`] but always splits, for coarse-grained items such as
/// Monte Carlo replicates or validation trials.
#[cfg(feature = "parallel")]
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let v = map_range(10_000, |i| i * 3);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 3 * i));
        let t = map_tasks(17, |i| i);
        assert_eq!(t, (0..17).collect::<Vec<_>>());
    }
}
