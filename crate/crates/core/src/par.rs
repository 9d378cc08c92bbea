//! Parallel/sequential execution switch.
//!
//! The data-parallel inner loops (ranking scans, batch encoding, per-query
//! metrics) all funnel through [`map_indexed`]. With the `parallel` feature
//! the work runs on rayon unless sequential mode is forced at runtime
//! (`--threads 1`); without the feature the sequential loop is the only
//! path. Results are order-preserving, so both modes are bit-identical.

#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces (or releases) sequential execution at runtime.
#[cfg(feature = "parallel")]
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::Relaxed);
}

#[cfg(not(feature = "parallel"))]
pub fn force_sequential(_on: bool) {}

/// True when calls to [`map_indexed`] will run sequentially.
pub fn is_sequential() -> bool {
    #[cfg(feature = "parallel")]
    {
        FORCE_SEQUENTIAL.load(Ordering::Relaxed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        true
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if is_sequential() {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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
        let out = map_indexed(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn forced_sequential_matches_parallel() {
        let par = map_indexed(1000, |i| i as u64 * 3);
        force_sequential(true);
        let seq = map_indexed(1000, |i| i as u64 * 3);
        force_sequential(false);
        assert_eq!(par, seq);
    }
}
