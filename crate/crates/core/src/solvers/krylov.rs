//! Lanczos and block Lanczos with full reorthogonalization.

use alloc::vec::Vec;

use crate::linalg::{max_norm, orthonormalize_against};
use crate::operator::{apply_batch_parallel, apply_sequential, BatchExecutor, LinearOperator};
use crate::posterior::{increment, UpdateKind};
use crate::rsvd::EigenPairs;
use crate::{Matrix, Vector, WorkLedger};

/// Lanczos stops when `β_i ≤ BREAKDOWN_TOL · ‖T‖` (running estimate).
pub const BREAKDOWN_TOL: f64 = 1e-12;
/// Block columns whose residual norm falls below this fraction of the
/// largest column are deflated.
pub const DEFLATION_TOL: f64 = 1e-10;

/// Orthonormal Krylov basis `Q` and the projection `T = QᵀAQ`.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub dim: usize,
    pub basis: Vec<Vector>,
    pub projected: Matrix,
    /// Lanczos breakdown or deflated block columns.
    pub deflations: usize,
}

impl KrylovBasis {
    pub fn ritz(&self) -> EigenPairs {
        EigenPairs::from_projected(self.dim, &self.basis, &self.projected)
    }

    /// `Q (T + I)⁻¹ Qᵀ rhs` through the Ritz pairs.
    pub fn solve(&self, rhs: &Vector) -> Vector {
        increment(UpdateKind::Lra, &self.ritz(), rhs)
    }
}

/// `steps` Lanczos iterations started from `start`, one sequential
/// operator application each.
pub fn lanczos<A: LinearOperator + ?Sized>(
    op: &A,
    start: &Vector,
    steps: usize,
    ledger: &WorkLedger,
) -> KrylovBasis {
    let n = op.dim();
    let beta0 = start.norm();
    let mut q: Vec<Vector> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut deflations = 0;
    if beta0 > 0.0 && steps > 0 {
        q.push(start / beta0);
        let mut tnorm: f64 = 0.0;
        for i in 0..steps {
            let mut w = apply_sequential(op, &q[i], ledger);
            let a = q[i].dot(&w);
            w.axpy(-a, &q[i], 1.0);
            if i > 0 {
                w.axpy(-beta[i - 1], &q[i - 1], 1.0);
            }
            for _ in 0..2 {
                for qj in &q {
                    let h = qj.dot(&w);
                    w.axpy(-h, qj, 1.0);
                }
            }
            let b = w.norm();
            alpha.push(a);
            tnorm = tnorm.max(a.abs() + b + beta.last().copied().unwrap_or(0.0));
            if i + 1 == steps {
                break;
            }
            if b <= BREAKDOWN_TOL * tnorm {
                deflations = 1;
                break;
            }
            beta.push(b);
            q.push(w / b);
        }
    }
    let k = alpha.len();
    let mut t = Matrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    KrylovBasis {
        dim: n,
        basis: q,
        projected: t,
        deflations,
    }
}

/// Block Lanczos with block `start`. Each step applies the operator to the
/// current block as one parallel batch; the next block is the new residual
/// orthonormalized against the whole basis, with near-null columns dropped.
pub fn block_lanczos<A: LinearOperator + ?Sized>(
    op: &A,
    start: &[Vector],
    steps: usize,
    exec: &dyn BatchExecutor,
    ledger: &WorkLedger,
) -> KrylovBasis {
    let n = op.dim();
    let mut block = orthonormalize_against(&[], start, DEFLATION_TOL, max_norm(start));
    let mut deflations = start.len() - block.len();
    let mut basis: Vec<Vector> = Vec::new();
    let mut products: Vec<Vector> = Vec::new();
    for step in 0..steps {
        if block.is_empty() {
            break;
        }
        let w = apply_batch_parallel(op, &block, exec, ledger);
        let width = block.len();
        basis.append(&mut block);
        if step + 1 < steps {
            block = orthonormalize_against(&basis, &w, DEFLATION_TOL, max_norm(&w));
            deflations += width - block.len();
        }
        products.extend(w);
    }
    let k = basis.len();
    let projected = Matrix::from_fn(k, k, |i, j| basis[i].dot(&products[j]));
    KrylovBasis {
        dim: n,
        basis,
        projected,
        deflations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseOperator, Sequential};
    use crate::rng;

    fn spd(n: usize, seed: u64) -> Matrix {
        let mut r = rng::stream(seed, 0);
        let g = rng::normal_matrix(&mut r, n, n);
        &g * g.transpose() / n as f64
    }

    #[test]
    fn full_lanczos_solves_exactly() {
        let a = spd(7, 1);
        let op = DenseOperator::new(a.clone()).unwrap();
        let b = rng::normal_vector(&mut rng::stream(2, 0), 7);
        let kry = lanczos(&op, &b, 7, &WorkLedger::new());
        let exact = (a + Matrix::identity(7, 7)).lu().solve(&b).unwrap();
        assert!((kry.solve(&b) - exact).norm() < 1e-10);
    }

    #[test]
    fn zero_operator_breaks_down_after_one_step() {
        let op = DenseOperator::new(Matrix::zeros(4, 4)).unwrap();
        let b = Vector::from_vec(alloc::vec![1.0, -1.0, 2.0, 0.0]);
        let ledger = WorkLedger::new();
        let kry = lanczos(&op, &b, 3, &ledger);
        assert_eq!(kry.basis.len(), 1);
        assert_eq!(kry.deflations, 1);
        assert_eq!(ledger.snapshot().work_units, 1);
        assert!((kry.solve(&b) - &b).norm() < 1e-15);
    }

    #[test]
    fn zero_start_gives_empty_basis() {
        let op = DenseOperator::new(Matrix::identity(3, 3)).unwrap();
        let kry = lanczos(&op, &Vector::zeros(3), 3, &WorkLedger::new());
        assert!(kry.basis.is_empty());
        assert_eq!(kry.solve(&Vector::zeros(3)), Vector::zeros(3));
    }

    #[test]
    fn single_column_block_matches_lanczos() {
        let a = spd(9, 3);
        let op = DenseOperator::new(a).unwrap();
        let b = rng::normal_vector(&mut rng::stream(4, 0), 9);
        let one = lanczos(&op, &b, 4, &WorkLedger::new()).solve(&b);
        let blk = block_lanczos(&op, std::slice::from_ref(&b), 4, &Sequential, &WorkLedger::new()).solve(&b);
        assert!((one - blk).norm() < 1e-10 * b.norm());
    }

    #[test]
    fn block_deflates_dependent_columns() {
        let op = DenseOperator::new(spd(5, 5)).unwrap();
        let b = rng::normal_vector(&mut rng::stream(6, 0), 5);
        let kry = block_lanczos(&op, &[b.clone(), &b * 2.0], 2, &Sequential, &WorkLedger::new());
        assert_eq!(kry.deflations, 1);
        assert_eq!(kry.basis.len(), 2);
    }
}
