//! Randomized eigendecomposition of symmetric positive semidefinite
//! operators, plus the dense reference decomposition.

use alloc::vec::Vec;

use crate::hessian::DENSE_LIMIT;
use crate::linalg::{max_norm, orthonormalize_against, sym_eig_desc};
use crate::operator::{apply_batch_parallel, assemble_dense, BatchExecutor, LinearOperator};
use crate::{rng, Error, Matrix, Result, Vector, WorkLedger};

/// Relative tolerance below which sketch columns count as linearly dependent.
pub const RANGE_DROP_TOL: f64 = 1e-12;
/// Relative cut for the pseudo-inverse of a rank-deficient `QᵀΩ`.
pub const SOLVE_RIDGE: f64 = 1e-12;

/// Approximate eigenpairs, eigenvalues in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    dim: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<Vector>,
}

impl EigenPairs {
    pub fn new(dim: usize, values: Vec<f64>, vectors: Vec<Vector>) -> Result<Self> {
        Error::check_dim("eigenvector count", values.len(), vectors.len())?;
        for v in &vectors {
            Error::check_dim("eigenvector", dim, v.len())?;
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::config("eigenvalues must be sorted in decreasing order"));
        }
        Ok(EigenPairs {
            dim,
            values,
            vectors,
        })
    }

    pub fn empty(dim: usize) -> Self {
        EigenPairs {
            dim,
            values: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Eigenpairs of the small symmetric `projected` matrix lifted through the
    /// orthonormal `basis` (Rayleigh-Ritz). Negative round-off values are
    /// clamped to zero.
    pub fn from_projected(dim: usize, basis: &[Vector], projected: &Matrix) -> Self {
        let (values, z) = sym_eig_desc(projected);
        let vectors = (0..values.len())
            .map(|i| {
                let mut u = Vector::zeros(dim);
                for (j, q) in basis.iter().enumerate() {
                    u.axpy(z[(j, i)], q, 1.0);
                }
                u
            })
            .collect();
        EigenPairs {
            dim,
            values: values.into_iter().map(|v| v.max(0.0)).collect(),
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest retained eigenvalue.
    pub fn smallest(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// The leading `k` pairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        EigenPairs {
            dim: self.dim,
            values: self.values[..k].to_vec(),
            vectors: self.vectors[..k].to_vec(),
        }
    }

    /// `Σ λ_i u_i u_iᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (l, u) in self.values.iter().zip(&self.vectors) {
            m.ger(*l, u, u, 1.0);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchConfig {
    /// Retained eigenpairs `k`.
    pub rank: usize,
    /// Extra samples `p`; the sketch uses `k + p` columns.
    pub oversample: usize,
    pub seed: u64,
    /// Offset added to the sketch stream; solvers use the outer-loop index.
    pub stream: u64,
}

impl SketchConfig {
    pub fn samples(&self) -> usize {
        self.rank + self.oversample
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::config("sketch rank must be at least 1"));
        }
        if self.samples() > dim {
            return Err(Error::config(alloc::format!(
                "sketch uses {} samples but the operator has dimension {dim}",
                self.samples()
            )));
        }
        Ok(())
    }
}

/// Optional map applied to every Gaussian sample before it hits the operator.
pub type SampleTransform<'a> = &'a (dyn Fn(&Vector) -> Vector + Sync);

/// Gaussian range finder followed by the small solve `K (QᵀΩ) = QᵀY`.
///
/// Draws `Ω` from the configured seed, optionally maps each column through
/// `transform`, forms `Y = AΩ` as one parallel batch, orthonormalizes `Y`
/// into `Q`, solves for `K` (ridge-regularized pseudo-inverse of `QᵀΩ`),
/// symmetrizes it and returns the top `rank` pairs lifted by `Q`. Fewer pairs
/// are returned when the sketch has lower numerical rank.
pub fn randomized_eig<A: LinearOperator + ?Sized>(
    op: &A,
    cfg: &SketchConfig,
    transform: Option<SampleTransform<'_>>,
    exec: &dyn BatchExecutor,
    ledger: &WorkLedger,
) -> Result<EigenPairs> {
    let n = op.dim();
    cfg.validate(n)?;
    let m = cfg.samples();
    let mut rng = rng::stream(cfg.seed, rng::SKETCH_STREAM + cfg.stream);
    let mut omega: Vec<Vector> = (0..m).map(|_| rng::normal_vector(&mut rng, n)).collect();
    if let Some(t) = transform {
        omega = omega.iter().map(t).collect();
    }
    let y = apply_batch_parallel(op, &omega, exec, ledger);
    Ok(eig_from_sketch(n, &omega, &y, cfg.rank))
}

/// Post-processing of a sketch `Y = AΩ`; single-threaded dense algebra.
pub fn eig_from_sketch(n: usize, omega: &[Vector], y: &[Vector], rank: usize) -> EigenPairs {
    let q = orthonormalize_against(&[], y, RANGE_DROP_TOL, max_norm(y));
    if q.is_empty() {
        return EigenPairs::empty(n);
    }
    let qt = |cols: &[Vector]| Matrix::from_fn(q.len(), cols.len(), |i, j| q[i].dot(&cols[j]));
    let g = qt(omega);
    let c = qt(y);
    let k = c * ridge_pinv(&g);
    EigenPairs::from_projected(n, &q, &k).truncated(rank)
}

/// Right pseudo-inverse of the `q × m` matrix `g` (`q ≤ m`).
///
/// Full row rank: least squares through a Householder QR of `gᵀ`.
/// Otherwise `gᵀ (g gᵀ)⁺`, where eigenvalues of `g gᵀ` below
/// `SOLVE_RIDGE · μ_max` are discarded.
fn ridge_pinv(g: &Matrix) -> Matrix {
    let (q, m) = g.shape();
    if q <= m {
        let qr = g.transpose().qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..q).map(|i| r[(i, i)].abs()).collect();
        let dmax = diag.iter().copied().fold(0.0, f64::max);
        if dmax > 0.0 && diag.iter().all(|d| *d > SOLVE_RIDGE * dmax) {
            let rinv_t = r
                .transpose()
                .solve_lower_triangular(&Matrix::identity(q, q))
                .expect("nonsingular triangle");
            return qr.q() * rinv_t;
        }
    }
    let (mu, z) = sym_eig_desc(&(g * g.transpose()));
    let cut = SOLVE_RIDGE * mu.first().copied().unwrap_or(0.0);
    let inv = Vector::from_iterator(
        mu.len(),
        mu.iter().map(|&u| if u > cut && u > 0.0 { 1.0 / u } else { 0.0 }),
    );
    g.transpose() * (&z * Matrix::from_diagonal(&inv) * z.transpose())
}

/// Dense assembly followed by a symmetric eigensolver; all `dim` pairs.
pub fn exact_eig<A: LinearOperator + ?Sized>(
    op: &A,
    exec: &dyn BatchExecutor,
    ledger: &WorkLedger,
) -> Result<EigenPairs> {
    let a = assemble_dense(op, exec, ledger, DENSE_LIMIT)?;
    Ok(exact_eig_dense(&a))
}

pub fn exact_eig_dense(a: &Matrix) -> EigenPairs {
    let n = a.nrows();
    let (values, z) = sym_eig_desc(a);
    EigenPairs {
        dim: n,
        values: values.into_iter().map(|v| v.max(0.0)).collect(),
        vectors: z.column_iter().map(|c| c.into_owned()).collect(),
    }
}

/// Degrees of freedom for signal, `Σ λ_i / (1 + λ_i)`.
pub fn dofs(eigs: &EigenPairs) -> f64 {
    eigs.values.iter().map(|l| l.max(0.0) / (1.0 + l.max(0.0))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;
    use crate::operator::{DenseOperator, Sequential};

    #[test]
    fn dofs_examples() {
        let mk = |v: &[f64]| EigenPairs {
            dim: 0,
            values: v.to_vec(),
            vectors: alloc::vec![Vector::zeros(0); v.len()],
        };
        assert_eq!(dofs(&mk(&[0.0, 0.0])), 0.0);
        assert_eq!(dofs(&mk(&[1.0])), 0.5);
        assert!((dofs(&mk(&[3.0, 1.0, 0.25])) - 1.45).abs() < 1e-15);
    }

    #[test]
    fn identity_gives_unit_values() {
        let op = DenseOperator::new(Matrix::identity(10, 10)).unwrap();
        let cfg = SketchConfig { rank: 5, oversample: 5, seed: 1, stream: 0 };
        let e = randomized_eig(&op, &cfg, None, &Sequential, &WorkLedger::new()).unwrap();
        assert_eq!(e.len(), 5);
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert!(orthonormality_defect(&e.vectors) < 1e-10);
    }

    #[test]
    fn exact_eig_of_diagonal() {
        let op = DenseOperator::diagonal(&[0.5, 3.0, 1.0]);
        let e = exact_eig(&op, &Sequential, &WorkLedger::new()).unwrap();
        assert_eq!(e.values, alloc::vec![3.0, 1.0, 0.5]);
        assert!((e.reconstruct() - &op.matrix).norm() < 1e-12);
    }

    #[test]
    fn oversampled_beyond_dim_is_rejected() {
        let op = DenseOperator::diagonal(&[1.0, 2.0]);
        let cfg = SketchConfig { rank: 2, oversample: 1, seed: 0, stream: 0 };
        assert!(randomized_eig(&op, &cfg, None, &Sequential, &WorkLedger::new()).is_err());
        let cfg = SketchConfig { rank: 0, oversample: 1, seed: 0, stream: 0 };
        assert!(randomized_eig(&op, &cfg, None, &Sequential, &WorkLedger::new()).is_err());
    }

    #[test]
    fn right_pseudo_inverse() {
        let mut r = rng::stream(3, 0);
        let g = rng::normal_matrix(&mut r, 3, 5);
        let p = ridge_pinv(&g);
        assert!((&g * &p - Matrix::identity(3, 3)).norm() < 1e-12);
        let mut d = g.clone();
        let row = d.row(0).into_owned();
        d.set_row(2, &(row * 2.0));
        let p = ridge_pinv(&d);
        assert!((&d * &p * &d - &d).norm() < 1e-8);
    }

    #[test]
    fn zero_operator_collapses() {
        let op = DenseOperator::new(Matrix::zeros(4, 4)).unwrap();
        let cfg = SketchConfig { rank: 2, oversample: 1, seed: 0, stream: 0 };
        let e = randomized_eig(&op, &cfg, None, &Sequential, &WorkLedger::new()).unwrap();
        assert!(e.is_empty());
    }
}
