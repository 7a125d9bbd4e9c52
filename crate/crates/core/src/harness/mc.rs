//! The replication engine.
//!
//! Replication `r` always draws from stream `r` of its key, and results are
//! collected in index order, so the output does not depend on scheduling.
//! With the `parallel` feature off everything runs on the calling thread.

/// Runs `f(state, r)` for `r in 0..reps` and returns results in index order.
///
/// `init` builds per-worker scratch state (observation buffers and the like).
/// `workers = None` uses the global pool; `Some(w)` a dedicated pool of `w`
/// threads.
#[cfg(feature = "parallel")]
pub fn map_reps<S, T, I, F>(reps: usize, workers: Option<usize>, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;
    let run = || {
        (0..reps as u64)
            .into_par_iter()
            .map_init(&init, |s, r| f(s, r))
            .collect::<Vec<T>>()
    };
    match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
        {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("could not build a {w}-thread pool ({e}); using the global pool");
                run()
            }
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_reps<S, T, I, F>(reps: usize, workers: Option<usize>, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
    T: Send,
{
    let _ = workers;
    map_reps_sequential(reps, init, f)
}

/// Single-threaded reference path, always available.
pub fn map_reps_sequential<S, T, I, F>(reps: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, u64) -> T,
{
    let mut s = init();
    (0..reps as u64).map(|r| f(&mut s, r)).collect()
}

/// Number of replications for which `f` returns true.
pub fn count_reps<S, I, F>(reps: usize, workers: Option<usize>, init: I, f: F) -> u64
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> bool + Sync + Send,
{
    map_reps(reps, workers, init, f)
        .into_iter()
        .filter(|&b| b)
        .count() as u64
}

/// Sum in index order.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}
