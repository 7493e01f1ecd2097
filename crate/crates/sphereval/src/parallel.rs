//! Deterministic work distribution. Batches are identified by index; each
//! batch computes independently (seeding itself from its index when it needs
//! randomness) and results are combined in index order, so the outcome does
//! not depend on scheduling. `SPHEREVAL_THREADS` caps the pool size.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Worker count: `SPHEREVAL_THREADS` if set and ≥ 1, else the available
/// parallelism, else 1.
pub fn thread_count() -> usize {
    if let Ok(v) = std::env::var("SPHEREVAL_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs `f(0), ..., f(batches-1)` on up to [`thread_count`] threads and
/// returns the results ordered by batch index.
pub fn run_batches<T, F>(batches: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_count().min(batches.max(1));
    if workers <= 1 || batches <= 1 {
        return (0..batches).map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..batches).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= batches {
                    break;
                }
                let out = f(i);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("batch result missing"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_arrive_in_index_order() {
        let out = run_batches(37, |i| i * i);
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
    }
}
