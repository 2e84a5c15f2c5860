//! Bounded worker pool with keyed result storage.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

/// Failure of one job inside [`run_keyed`].
#[derive(Debug)]
pub struct JobFailure<E> {
    pub index: usize,
    pub completed: usize,
    pub error: E,
}

/// Run `jobs` independent closures on at most `parallelism` threads.
///
/// Results are stored by job index, so the output order never depends on
/// completion order. The first failure stops the pool from taking new jobs;
/// among the failures observed, the one with the lowest index is returned.
pub fn run_keyed<T, E, F>(jobs: usize, parallelism: usize, f: F) -> Result<Vec<T>, JobFailure<E>>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let workers = parallelism.max(1).min(jobs.max(1));
    let slots: Vec<Mutex<Option<T>>> = (0..jobs).map(|_| Mutex::new(None)).collect();
    let failures: Mutex<Vec<(usize, E)>> = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);

    let worker = || loop {
        if abort.load(Ordering::SeqCst) {
            break;
        }
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= jobs {
            break;
        }
        match f(i) {
            Ok(v) => *slots[i].lock().unwrap() = Some(v),
            Err(e) => {
                abort.store(true, Ordering::SeqCst);
                failures.lock().unwrap().push((i, e));
            }
        }
    };

    if workers == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(worker);
            }
        });
    }

    let mut failures = failures.into_inner().unwrap();
    let results: Vec<Option<T>> = slots.into_iter().map(|m| m.into_inner().unwrap()).collect();
    if !failures.is_empty() {
        failures.sort_by_key(|(i, _)| *i);
        let (index, error) = failures.swap_remove(0);
        let completed = results.iter().filter(|r| r.is_some()).count();
        return Err(JobFailure { index, completed, error });
    }
    Ok(results.into_iter().map(|r| r.expect("job finished")).collect())
}
