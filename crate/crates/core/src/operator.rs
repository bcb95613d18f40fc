//! Matrix-free symmetric operators and batched application.

use alloc::vec::Vec;

use crate::{Error, Matrix, Result, Vector, WorkLedger};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `A v`. Implementations must be pure: concurrent calls on distinct
    /// inputs may not share mutable state.
    fn apply(&self, v: &Vector) -> Vector;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        (**self).apply(v)
    }
}

/// Runs independent tasks, possibly concurrently.
///
/// Results must be returned in task order so that outputs never depend on
/// the number of workers.
pub trait BatchExecutor: Sync {
    fn workers(&self) -> usize;

    /// Evaluates `task(i)` for `i in 0..tasks`. On failure, returns the error
    /// of the lowest failing index.
    fn try_map(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<Vector> + Sync),
    ) -> Result<Vec<Vector>>;

    fn map(&self, tasks: usize, task: &(dyn Fn(usize) -> Vector + Sync)) -> Vec<Vector> {
        self.try_map(tasks, &|i| Ok(task(i)))
            .expect("infallible tasks cannot fail")
    }
}

/// Reference executor: evaluates tasks in order on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BatchExecutor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn try_map(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<Vector> + Sync),
    ) -> Result<Vec<Vector>> {
        (0..tasks).map(task).collect()
    }
}

/// Applies `op` to every vector of `vs` through `exec`, charging `|vs|` work
/// units and `ceil(|vs| / workers)` depth.
pub fn apply_batch_parallel<A: LinearOperator + ?Sized>(
    op: &A,
    vs: &[Vector],
    exec: &dyn BatchExecutor,
    ledger: &WorkLedger,
) -> Vec<Vector> {
    let out = exec.map(vs.len(), &|i| op.apply(&vs[i]));
    ledger.record_applies(vs.len(), exec.workers());
    out
}

/// One application on the critical path.
pub fn apply_sequential<A: LinearOperator + ?Sized>(
    op: &A,
    v: &Vector,
    ledger: &WorkLedger,
) -> Vector {
    let out = op.apply(v);
    ledger.record_applies(1, 1);
    out
}

/// Assembles `A` column by column from its action on unit vectors.
pub fn assemble_dense<A: LinearOperator + ?Sized>(
    op: &A,
    exec: &dyn BatchExecutor,
    ledger: &WorkLedger,
    limit: usize,
) -> Result<Matrix> {
    let n = op.dim();
    if n > limit {
        return Err(Error::TooLarge { dim: n, limit });
    }
    let cols = exec.map(n, &|j| {
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        op.apply(&e)
    });
    ledger.record_applies(n, exec.workers());
    Ok(crate::linalg::columns_to_matrix(n, &cols))
}

/// Explicit matrix behind the operator contract; used for small instances.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub matrix: Matrix,
}

impl DenseOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        Error::check_dim("dense operator", matrix.nrows(), matrix.ncols())?;
        Ok(DenseOperator { matrix })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        DenseOperator {
            matrix: Matrix::from_diagonal(&Vector::from_column_slice(values)),
        }
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn batch_matches_loop_and_accounts() {
        let mut r = rng::stream(1, 0);
        let g = rng::normal_matrix(&mut r, 6, 6);
        let op = DenseOperator::new(&g * g.transpose()).unwrap();
        let vs: Vec<Vector> = (0..5).map(|_| rng::normal_vector(&mut r, 6)).collect();
        let ledger = WorkLedger::new();
        let out = apply_batch_parallel(&op, &vs, &Sequential, &ledger);
        for (o, v) in out.iter().zip(&vs) {
            assert_eq!(*o, op.apply(v));
        }
        assert_eq!(ledger.snapshot().work_units, 5);
        assert_eq!(ledger.snapshot().sequential_depth, 5);
    }

    #[test]
    fn assemble_respects_limit() {
        let op = DenseOperator::diagonal(&[1.0, 2.0, 3.0]);
        let l = WorkLedger::new();
        assert_eq!(assemble_dense(&op, &Sequential, &l, 10).unwrap(), op.matrix);
        assert!(matches!(
            assemble_dense(&op, &Sequential, &l, 2),
            Err(Error::TooLarge { .. })
        ));
    }
}
