//! Execution strategy for the data-parallel pixel loops.
//!
//! Per-pixel work is embarrassingly parallel: each output element depends
//! only on the inputs, so splitting rows across threads cannot change any
//! result bit. Reductions never go through this module; they use the fixed
//! summation order in [`crate::math`].
//!
//! With the `parallel` feature (default) the helpers fan rows out over rayon;
//! without it they degrade to plain loops. [`Exec::Sequential`] is always
//! available so the benches can compare both paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to schedule a per-pixel loop. `Exec::default()` picks the widest
/// strategy the build supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

/// Runs `f(y, row)` for every `width`-sized row of `out`.
pub(crate) fn fill_rows<T, F>(exec: Exec, out: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    debug_assert_eq!(out.len() % width, 0);
    match exec {
        Exec::Sequential => {
            for (y, row) in out.chunks_mut(width).enumerate() {
                f(y, row);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            out.par_chunks_mut(width)
                .enumerate()
                .for_each(|(y, row)| f(y, row));
        }
    }
}

/// Runs `f(y, row_a, row_b)` over two buffers with per-row widths `wa`, `wb`
/// (used for value/mask output pairs).
pub(crate) fn fill_rows_pair<A, B, F>(
    exec: Exec,
    a: &mut [A],
    wa: usize,
    b: &mut [B],
    wb: usize,
    f: F,
) where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync,
{
    debug_assert_eq!(a.len() / wa, b.len() / wb);
    match exec {
        Exec::Sequential => {
            for (y, (ra, rb)) in a.chunks_mut(wa).zip(b.chunks_mut(wb)).enumerate() {
                f(y, ra, rb);
            }
        }
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            a.par_chunks_mut(wa)
                .zip(b.par_chunks_mut(wb))
                .enumerate()
                .for_each(|(y, (ra, rb))| f(y, ra, rb));
        }
    }
}

/// Collects `f(0), ..., f(n - 1)` in index order.
pub(crate) fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}
