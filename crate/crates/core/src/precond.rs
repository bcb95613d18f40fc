//! Limited-memory spectral preconditioner and sample rotation.
//!
//! Each outer loop contributes a factor `P'_j = I + Ṽ(Λ̃^{-1/2} - I)Ṽᵀ` with
//! `Λ̃ = Λ + I`; the accumulated map is `P = P'_0 P'_1 ⋯ P'_{k-1}`. Factors
//! are symmetric, so `Pᵀ` is the same product in reverse order.

use alloc::vec::Vec;

use crate::linalg::{low_rank_apply, max_norm, orthonormality_defect, orthonormalize_against, sqrt};
use crate::operator::LinearOperator;
use crate::rsvd::EigenPairs;
use crate::{Error, Matrix, Result, Vector};

/// Largest accepted `|VᵀV - I|` entry for vectors passed to `extend`.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;
/// Relative residual cut when building the rotation basis.
pub const ROTATION_DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    vectors: Vec<Vector>,
    /// `(1 + λ)^{-1/2} - 1`
    forward: Vec<f64>,
    /// `(1 + λ)^{1/2} - 1`
    inverse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPreconditioner {
    dim: usize,
    factors: Vec<Factor>,
    /// `P_j Ṽ_j` for every factor, with `P_j` the product before factor `j`.
    lifted: Vec<Vec<Vector>>,
}

impl SpectralPreconditioner {
    pub fn identity(dim: usize) -> Self {
        SpectralPreconditioner {
            dim,
            factors: Vec::new(),
            lifted: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// Number of accumulated factors (resolved outer loops).
    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    pub fn resolved_modes(&self) -> usize {
        self.factors.iter().map(|f| f.vectors.len()).sum()
    }

    /// Appends the factor built from Hessian eigenpairs `eigs`, which must
    /// be expressed in the coordinates of the current preconditioned problem.
    pub fn extend(&self, eigs: &EigenPairs) -> Result<Self> {
        Error::check_dim("preconditioner eigenvectors", self.dim, eigs.dim())?;
        let defect = orthonormality_defect(&eigs.vectors);
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
        let lifted = eigs.vectors.iter().map(|u| self.apply(u)).collect();
        let lam = |l: f64| 1.0 + l.max(0.0);
        let factor = Factor {
            vectors: eigs.vectors.clone(),
            forward: eigs.values.iter().map(|&l| 1.0 / sqrt(lam(l)) - 1.0).collect(),
            inverse: eigs.values.iter().map(|&l| sqrt(lam(l)) - 1.0).collect(),
        };
        let mut next = self.clone();
        next.factors.push(factor);
        next.lifted.push(lifted);
        Ok(next)
    }

    /// `P v`.
    pub fn apply(&self, v: &Vector) -> Vector {
        let mut out = v.clone();
        for f in self.factors.iter().rev() {
            out += low_rank_apply(&f.vectors, &f.forward, &out);
        }
        out
    }

    /// `Pᵀ v`.
    pub fn apply_transpose(&self, v: &Vector) -> Vector {
        let mut out = v.clone();
        for f in &self.factors {
            out += low_rank_apply(&f.vectors, &f.forward, &out);
        }
        out
    }

    /// `P⁻¹ v = P'_{k-1}⁻¹ ⋯ P'_0⁻¹ v`.
    pub fn apply_inverse(&self, v: &Vector) -> Vector {
        let mut out = v.clone();
        for f in &self.factors {
            out += low_rank_apply(&f.vectors, &f.inverse, &out);
        }
        out
    }

    /// `P δv`, the control-space increment of a preconditioned solve.
    pub fn lift_increment(&self, dv: &Vector) -> Vector {
        self.apply(dv)
    }

    /// Every stored `P_j Ṽ_j`, oldest first.
    pub fn lifted_modes(&self) -> impl Iterator<Item = &Vector> {
        self.lifted.iter().flatten()
    }

    /// Dense `P`; small dimensions only.
    pub fn dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut e = Vector::zeros(self.dim);
            e[j] = 1.0;
            m.set_column(j, &self.apply(&e));
        }
        m
    }
}

/// `Â = Pᵀ(A₀ + I)P - I`, applied as `Pᵀ(Pv + A₀Pv) - v`.
pub struct PreconditionedHessian<'a, A: ?Sized> {
    base: &'a A,
    pc: &'a SpectralPreconditioner,
}

pub fn precondition_hessian<'a, A: LinearOperator + ?Sized>(
    base: &'a A,
    pc: &'a SpectralPreconditioner,
) -> PreconditionedHessian<'a, A> {
    PreconditionedHessian { base, pc }
}

impl<A: LinearOperator + ?Sized> LinearOperator for PreconditionedHessian<'_, A> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        if self.pc.is_identity() {
            return self.base.apply(v);
        }
        let w = self.pc.apply(v);
        let aw = self.base.apply(&w);
        self.pc.apply_transpose(&(w + aw)) - v
    }
}

/// `ω ↦ P⁻¹(I - UUᵀ)ω`, with `U` an orthonormal basis of the lifted modes.
#[derive(Debug, Clone)]
pub struct RotationTransform<'a> {
    pc: &'a SpectralPreconditioner,
    basis: Vec<Vector>,
}

impl<'a> RotationTransform<'a> {
    /// Builds `U` as an orthonormal basis of the concatenated lifted modes
    /// of `pc` (Gram-Schmidt QR), dropping directions whose residual falls
    /// below `1e-10` of the largest mode norm.
    pub fn new(pc: &'a SpectralPreconditioner) -> Self {
        let modes: Vec<Vector> = pc.lifted_modes().cloned().collect();
        let basis = orthonormalize_against(&[], &modes, ROTATION_DROP_TOL, max_norm(&modes));
        RotationTransform { pc, basis }
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// `(I - UUᵀ)ω`.
    pub fn project(&self, w: &Vector) -> Vector {
        let mut out = w.clone();
        for u in &self.basis {
            let c = u.dot(&out);
            out.axpy(-c, u, 1.0);
        }
        out
    }

    pub fn apply(&self, w: &Vector) -> Vector {
        self.pc.apply_inverse(&self.project(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::rsvd::exact_eig_dense;

    fn unit(n: usize, i: usize) -> Vector {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        e
    }

    #[test]
    fn single_pair_halves_its_direction() {
        let u = unit(4, 1);
        let eigs = EigenPairs::new(4, alloc::vec![3.0], alloc::vec![u.clone()]).unwrap();
        let pc = SpectralPreconditioner::identity(4).extend(&eigs).unwrap();
        assert!((pc.apply(&u) - &u * 0.5).norm() < 1e-15);
        let w = unit(4, 2);
        assert_eq!(pc.apply(&w), w);
        assert!((pc.apply_inverse(&u) - &u * 2.0).norm() < 1e-15);
    }

    #[test]
    fn zero_values_leave_identity() {
        let eigs = EigenPairs::new(3, alloc::vec![0.0, 0.0], alloc::vec![unit(3, 0), unit(3, 2)]).unwrap();
        let pc = SpectralPreconditioner::identity(3).extend(&eigs).unwrap();
        let v = Vector::from_vec(alloc::vec![1.0, -2.0, 0.5]);
        assert_eq!(pc.apply(&v), v);
    }

    #[test]
    fn rejects_non_orthonormal() {
        let a = unit(3, 0);
        let b = Vector::from_vec(alloc::vec![1.0, 1.0, 0.0]);
        let eigs = EigenPairs::new(3, alloc::vec![2.0, 1.0], alloc::vec![a, b]).unwrap();
        assert!(matches!(
            SpectralPreconditioner::identity(3).extend(&eigs),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn inverse_and_transpose_after_two_extensions() {
        let mut r = rng::stream(5, 0);
        let g = rng::normal_matrix(&mut r, 10, 10);
        let a = &g * g.transpose();
        let e1 = exact_eig_dense(&a).truncated(3);
        let pc = SpectralPreconditioner::identity(10).extend(&e1).unwrap();
        let g2 = rng::normal_matrix(&mut r, 10, 10);
        let e2 = exact_eig_dense(&(&g2 * g2.transpose())).truncated(2);
        let pc = pc.extend(&e2).unwrap();
        let p = pc.dense();
        for _ in 0..20 {
            let v = rng::normal_vector(&mut r, 10);
            assert!((pc.apply(&pc.apply_inverse(&v)) - &v).norm() < 1e-8 * v.norm());
            assert!((pc.apply_inverse(&pc.apply(&v)) - &v).norm() < 1e-8 * v.norm());
            assert!((pc.apply_transpose(&v) - p.transpose() * &v).norm() < 1e-12 * v.norm());
        }
    }

    #[test]
    fn rotation_kills_resolved_span() {
        let mut r = rng::stream(6, 0);
        let g = rng::normal_matrix(&mut r, 8, 8);
        let e = exact_eig_dense(&(&g * g.transpose())).truncated(2);
        let pc = SpectralPreconditioner::identity(8).extend(&e).unwrap();
        let rot = RotationTransform::new(&pc);
        assert_eq!(rot.basis().len(), 2);
        let w = &e.vectors[0] * 2.0 - &e.vectors[1];
        assert!(rot.apply(&w).norm() <= 1e-8 * w.norm());
        let x = rng::normal_vector(&mut r, 8);
        let once = rot.project(&x);
        assert!((rot.project(&once) - &once).norm() < 1e-12 * x.norm());
    }

    #[test]
    fn empty_rotation_is_identity() {
        let pc = SpectralPreconditioner::identity(5);
        let rot = RotationTransform::new(&pc);
        let w = Vector::from_element(5, 1.5);
        assert_eq!(rot.apply(&w), w);
    }
}
