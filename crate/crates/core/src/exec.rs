//! Data-parallel execution helpers.
//!
//! Every embarrassingly parallel loop in the crate (per-direction solves,
//! per-receiver field sweeps, per-sample indicator evaluation) goes through
//! these functions. With the default `parallel` feature they dispatch to
//! rayon; without it they run sequentially. Results are written per index,
//! so the output is byte-identical regardless of worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Mutates the rows of `rows` in parallel, one call per row.
#[cfg(feature = "parallel")]
pub fn for_each_row<T, F>(rows: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    rows.par_iter_mut().enumerate().for_each(|(i, row)| f(i, row));
}

/// Mutates the rows of `rows` in parallel, one call per row.
#[cfg(not(feature = "parallel"))]
pub fn for_each_row<T, F>(rows: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    rows.iter_mut().enumerate().for_each(|(i, row)| f(i, row));
}
