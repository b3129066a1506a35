//! Deterministic parallel evaluation of independent trials.
//!
//! Trials are split into contiguous index ranges, one per worker, and the
//! results land in a single ordered buffer. Combined with per-trial seed
//! derivation this makes every statistic independent of the worker count.

use crate::error::Result;

/// Evaluates `f(0..count)` into an ordered vector, using up to `workers`
/// OS threads. `workers <= 1` runs inline.
pub fn run_trials<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = workers.max(1).min(count.max(1));
    if workers == 1 {
        return (0..count).map(&f).collect();
    }

    let mut slots: Vec<Option<Result<T>>> = Vec::with_capacity(count);
    slots.resize_with(count, || None);
    let chunk = count.div_ceil(workers);
    std::thread::scope(|scope| {
        for (w, slice) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                let base = w * chunk;
                for (i, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(base + i));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.expect("worker filled every slot"))
        .collect()
}

/// Pairwise (cascade) summation: deterministic for a fixed input order and
/// accurate to O(log n) rounding.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error (stddev / sqrt(n), n-1 denominator).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
