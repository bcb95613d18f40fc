use alloc::vec::Vec;

use super::Method;
use crate::posterior::{PosteriorEstimate, UpdateKind};
use crate::{Vector, WorkCounts};

/// One completed outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub outer: usize,
    /// Nonquadratic cost at the start of the loop.
    pub cost: f64,
    /// Control-space increment `δv = v_k - v_{k-1}`, with `x = x_b + L v`.
    pub control_increment: Vector,
    pub increment_norm: f64,
    /// `x_k - x_{k-1}`.
    pub state_increment: Vector,
    /// Retained Hessian eigenvalue estimates, decreasing.
    pub eigenvalues: Vec<f64>,
    pub kind: Option<UpdateKind>,
    pub dofs: f64,
    /// Columns dropped by block deflation or range-finder rank collapse.
    pub deflations: usize,
    /// Work charged to this loop.
    pub work: WorkCounts,
    /// Ledger totals at the end of this loop.
    pub cumulative: WorkCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// The nonlinear model diverged while evaluating the state of `outer`.
    Diverged { outer: usize, step: usize },
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub method: Method,
    pub records: Vec<OuterRecord>,
    /// Final analysis `x_a`.
    pub analysis: Vector,
    /// Cost at `x_a`; infinite if the model diverged there.
    pub final_cost: f64,
    /// Posterior estimate from the last loop, when its spectrum lives in the
    /// unpreconditioned control space.
    pub posterior: Option<PosteriorEstimate>,
    pub totals: WorkCounts,
    pub termination: Termination,
}

impl SolverReport {
    /// Costs at the start of every loop followed by the final cost.
    pub fn cost_curve(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.cost)
            .chain(core::iter::once(self.final_cost))
            .collect()
    }

    /// Cost after outer loop `i` (zero based).
    pub fn cost_after(&self, i: usize) -> Option<f64> {
        if i + 1 < self.records.len() {
            Some(self.records[i + 1].cost)
        } else if i + 1 == self.records.len() {
            Some(self.final_cost)
        } else {
            None
        }
    }

    /// `x_b + Σ_k (x_k - x_{k-1})`.
    pub fn reconstruct(&self, background: &Vector) -> Vector {
        self.records
            .iter()
            .fold(background.clone(), |x, r| x + &r.state_increment)
    }
}
