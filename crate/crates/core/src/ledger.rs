//! Hardware-independent cost accounting.
//!
//! `work_units` counts operator applications (one TL+AD pair each) and
//! `sequential_depth` counts how many of them lie on the critical path given
//! the available workers. Nonlinear runs and standalone TL/AD runs (gradients,
//! lifts) are tallied separately.

use core::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Default)]
pub struct WorkLedger {
    nonlinear_runs: AtomicU64,
    tl_runs: AtomicU64,
    ad_runs: AtomicU64,
    work_units: AtomicU64,
    sequential_depth: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounts {
    pub nonlinear_runs: u64,
    pub tl_runs: u64,
    pub ad_runs: u64,
    pub work_units: u64,
    pub sequential_depth: u64,
}

impl WorkCounts {
    /// Counter-wise difference `self - earlier`.
    pub fn since(&self, earlier: &WorkCounts) -> WorkCounts {
        WorkCounts {
            nonlinear_runs: self.nonlinear_runs - earlier.nonlinear_runs,
            tl_runs: self.tl_runs - earlier.tl_runs,
            ad_runs: self.ad_runs - earlier.ad_runs,
            work_units: self.work_units - earlier.work_units,
            sequential_depth: self.sequential_depth - earlier.sequential_depth,
        }
    }
}

impl WorkLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_nonlinear(&self) {
        self.nonlinear_runs.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_tl(&self) {
        self.tl_runs.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_ad(&self) {
        self.ad_runs.fetch_add(1, Ordering::Relaxed);
    }

    /// `count` operator applications spread over `workers`.
    pub fn record_applies(&self, count: usize, workers: usize) {
        if count == 0 {
            return;
        }
        let workers = workers.max(1);
        self.work_units.fetch_add(count as u64, Ordering::Relaxed);
        self.sequential_depth
            .fetch_add(count.div_ceil(workers) as u64, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> WorkCounts {
        WorkCounts {
            nonlinear_runs: self.nonlinear_runs.load(Ordering::Relaxed),
            tl_runs: self.tl_runs.load(Ordering::Relaxed),
            ad_runs: self.ad_runs.load(Ordering::Relaxed),
            work_units: self.work_units.load(Ordering::Relaxed),
            sequential_depth: self.sequential_depth.load(Ordering::Relaxed),
        }
    }
}
