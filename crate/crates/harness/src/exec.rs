//! Scoped-thread executor.
//!
//! Tasks are claimed from a shared counter and written into per-index slots,
//! so results come back in task order whatever the thread count. The worker
//! count reported to the depth ledger is configured separately from the
//! number of threads, which keeps every recorded number independent of the
//! machine.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use riot_core::{BatchExecutor, Result, Vector};

/// Environment variable overriding the thread count.
pub const WORKERS_ENV: &str = "RIOT_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pool {
    threads: usize,
    /// `0` charges one worker per task.
    ledger_workers: usize,
}

impl Pool {
    pub fn new(threads: usize, ledger_workers: usize) -> Self {
        Pool {
            threads: threads.max(1),
            ledger_workers,
        }
    }

    pub fn sequential(ledger_workers: usize) -> Self {
        Pool::new(1, ledger_workers)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Same ledger width on a single thread.
    pub fn single(&self) -> Pool {
        Pool::new(1, self.ledger_workers)
    }

    /// `f(i)` for `i in 0..tasks`, in order.
    pub fn map_ordered<T: Send>(&self, tasks: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        if self.threads == 1 || tasks <= 1 {
            return (0..tasks).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<T>>> = (0..tasks).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..self.threads.min(tasks) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= tasks {
                        break;
                    }
                    let out = f(i);
                    *slots[i].lock().unwrap() = Some(out);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every task ran"))
            .collect()
    }
}

impl BatchExecutor for Pool {
    fn workers(&self) -> usize {
        if self.ledger_workers == 0 {
            usize::MAX
        } else {
            self.ledger_workers
        }
    }

    fn try_map(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<Vector> + Sync),
    ) -> Result<Vec<Vector>> {
        self.map_ordered(tasks, task).into_iter().collect()
    }
}

/// Thread count from an explicit flag, then `RIOT_WORKERS`, then the
/// available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
