//! Replicate-level parallelism.
//!
//! Work is always expressed as a pure function of the replicate index and the
//! results come back in index order, so any reduction over them is identical
//! whether the batch ran on one thread or many. Without the `parallel`
//! feature both modes run sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Evaluates `f(i)` for `i in 0..count`, returning results in index order.
pub fn map_indexed<T, F>(exec: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..count).map(f).collect(),
        Execution::Parallel => parallel_map(count, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Like [`map_indexed`] but folds the ordered results with `fold` in chunks,
/// so memory stays bounded for very large replicate counts.
pub fn fold_indexed<T, A, F, G>(exec: Execution, count: usize, chunk: usize, init: A, f: F, mut fold: G) -> A
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    G: FnMut(A, T) -> A,
{
    let chunk = chunk.max(1);
    let mut acc = init;
    let mut start = 0;
    while start < count {
        let end = (start + chunk).min(count);
        let batch = map_indexed(exec, end - start, |i| f(start + i));
        for item in batch {
            acc = fold(acc, item);
        }
        start = end;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_in_order() {
        let f = |i: usize| (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let a = map_indexed(Execution::Sequential, 1000, f);
        let b = map_indexed(Execution::Parallel, 1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn fold_matches_direct_sum() {
        let total = fold_indexed(Execution::Parallel, 1001, 64, 0u64, |i| i as u64, |a, x| a + x);
        assert_eq!(total, 1001 * 1000 / 2);
    }
}
