//! Low-rank increments and posterior covariances from Hessian eigenpairs.
//!
//! With `A = Σ λ_i u_i u_iᵀ` (control space) the exact posterior is
//! `L (I + A)⁻¹ Lᵀ`. The low-rank approximation (LRA) keeps only the
//! retained directions; the low-rank update (LRU) subtracts them from the
//! prior.

use alloc::vec::Vec;

use crate::linalg::{frobenius, low_rank_apply};
use crate::rsvd::EigenPairs;
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    Lra,
    Lru,
}

impl UpdateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateKind::Lra => "LRA",
            UpdateKind::Lru => "LRU",
        }
    }
}

/// LRA iff the smallest retained eigenvalue is strictly above one.
/// An empty spectrum selects LRU, which then reduces to the identity.
pub fn adaptive_kind(eigs: &EigenPairs) -> UpdateKind {
    match eigs.smallest() {
        Some(l) if l > 1.0 => UpdateKind::Lra,
        _ => UpdateKind::Lru,
    }
}

fn lra_weights(values: &[f64]) -> Vec<f64> {
    values.iter().map(|l| 1.0 / (1.0 + l)).collect()
}

fn lru_weights(values: &[f64]) -> Vec<f64> {
    values.iter().map(|l| l / (1.0 + l)).collect()
}

/// Approximate `(I + A)⁻¹ rhs`.
///
/// LRA: `Σ (1+λ_i)⁻¹ u_i u_iᵀ rhs`. LRU: `rhs - Σ λ_i/(1+λ_i) u_i u_iᵀ rhs`.
pub fn increment(kind: UpdateKind, eigs: &EigenPairs, rhs: &Vector) -> Vector {
    match kind {
        UpdateKind::Lra => low_rank_apply(&eigs.vectors, &lra_weights(&eigs.values), rhs),
        UpdateKind::Lru => rhs - low_rank_apply(&eigs.vectors, &lru_weights(&eigs.values), rhs),
    }
}

/// Posterior covariance estimate in state space.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimate {
    pub kind: UpdateKind,
    pub eigs: EigenPairs,
    prior_sqrt: Matrix,
    prior_cov: Matrix,
}

impl PosteriorEstimate {
    pub fn new(kind: UpdateKind, eigs: EigenPairs, prior_sqrt: Matrix, prior_cov: Matrix) -> Result<Self> {
        let n = prior_sqrt.nrows();
        Error::check_dim("prior square root", n, prior_sqrt.ncols())?;
        Error::check_dim("prior covariance", n, prior_cov.nrows())?;
        Error::check_dim("eigenvectors", n, eigs.dim())?;
        Ok(PosteriorEstimate {
            kind,
            eigs,
            prior_sqrt,
            prior_cov,
        })
    }

    pub fn increment(&self, rhs: &Vector) -> Vector {
        increment(self.kind, &self.eigs, rhs)
    }

    fn weights(&self) -> Vec<f64> {
        match self.kind {
            UpdateKind::Lra => lra_weights(&self.eigs.values),
            UpdateKind::Lru => lru_weights(&self.eigs.values),
        }
    }

    /// `P̃_a x` without forming the matrix.
    pub fn apply(&self, x: &Vector) -> Vector {
        let z = self.prior_sqrt.tr_mul(x);
        let low = &self.prior_sqrt * low_rank_apply(&self.eigs.vectors, &self.weights(), &z);
        match self.kind {
            UpdateKind::Lra => low,
            UpdateKind::Lru => &self.prior_cov * x - low,
        }
    }

    /// Dense `P̃_a`.
    pub fn covariance(&self) -> Matrix {
        let n = self.prior_sqrt.nrows();
        let mut inner = Matrix::zeros(n, n);
        for (w, u) in self.weights().iter().zip(&self.eigs.vectors) {
            inner.ger(*w, u, u, 1.0);
        }
        let low = &self.prior_sqrt * inner * self.prior_sqrt.transpose();
        let low = (&low + low.transpose()) * 0.5;
        match self.kind {
            UpdateKind::Lra => low,
            UpdateKind::Lru => &self.prior_cov - low,
        }
    }
}

pub fn lra_covariance(eigs: EigenPairs, prior_sqrt: &Matrix) -> Result<PosteriorEstimate> {
    let cov = prior_sqrt * prior_sqrt.transpose();
    PosteriorEstimate::new(UpdateKind::Lra, eigs, prior_sqrt.clone(), cov)
}

pub fn lru_covariance(eigs: EigenPairs, prior_sqrt: &Matrix, prior_cov: &Matrix) -> Result<PosteriorEstimate> {
    PosteriorEstimate::new(UpdateKind::Lru, eigs, prior_sqrt.clone(), prior_cov.clone())
}

/// `L (I + A)⁻¹ Lᵀ` from a dense control-space Hessian `A`.
pub fn dense_posterior(prior_sqrt: &Matrix, hessian: &Matrix) -> Result<Matrix> {
    let n = hessian.nrows();
    let shifted = hessian + Matrix::identity(n, n);
    let chol = shifted
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("I + A"))?;
    let p = prior_sqrt * chol.solve(&prior_sqrt.transpose());
    Ok((&p + p.transpose()) * 0.5)
}

/// `‖approx - exact‖²`.
pub fn increment_error(approx: &Vector, exact: &Vector) -> Result<f64> {
    Error::check_dim("increment", exact.len(), approx.len())?;
    Ok((approx - exact).norm_squared())
}

/// `‖P̃ - P‖_F / ‖P‖_F`.
pub fn covariance_error(approx: &Matrix, exact: &Matrix) -> Result<f64> {
    Error::check_dim("covariance rows", exact.nrows(), approx.nrows())?;
    Error::check_dim("covariance columns", exact.ncols(), approx.ncols())?;
    let denom = frobenius(exact);
    let num = frobenius(&(approx - exact));
    if denom == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::rsvd::exact_eig_dense;
    use alloc::vec;

    fn pairs(values: &[f64]) -> EigenPairs {
        let n = values.len().max(1);
        let vectors = (0..values.len())
            .map(|i| {
                let mut e = Vector::zeros(n);
                e[i] = 1.0;
                e
            })
            .collect();
        EigenPairs::new(n, values.to_vec(), vectors).unwrap()
    }

    #[test]
    fn adaptive_rule() {
        assert_eq!(adaptive_kind(&pairs(&[5.0, 3.0, 2.0])), UpdateKind::Lra);
        assert_eq!(adaptive_kind(&pairs(&[5.0, 0.5])), UpdateKind::Lru);
        assert_eq!(adaptive_kind(&pairs(&[4.0, 1.0])), UpdateKind::Lru);
        assert_eq!(adaptive_kind(&EigenPairs::empty(3)), UpdateKind::Lru);
    }

    #[test]
    fn empty_spectrum_increments() {
        let e = EigenPairs::empty(3);
        let b = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(increment(UpdateKind::Lru, &e, &b), b);
        assert_eq!(increment(UpdateKind::Lra, &e, &b), Vector::zeros(3));
    }

    #[test]
    fn lra_single_pair_halves() {
        let e = EigenPairs::new(2, vec![1.0], vec![Vector::from_vec(vec![1.0, 0.0])]).unwrap();
        let p = lra_covariance(e, &Matrix::identity(2, 2)).unwrap().covariance();
        assert_eq!(p, Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn lru_without_pairs_is_prior() {
        let b = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let l = b.clone().cholesky().unwrap().l();
        let est = lru_covariance(EigenPairs::empty(2), &l, &b).unwrap();
        assert_eq!(est.covariance(), b);
    }

    #[test]
    fn full_spectrum_matches_dense_posterior() {
        let mut r = rng::stream(8, 0);
        let g = rng::normal_matrix(&mut r, 6, 6);
        let a = &g * g.transpose();
        let h = rng::normal_matrix(&mut r, 6, 6);
        let l = &h * 0.3 + Matrix::identity(6, 6);
        let exact = dense_posterior(&l, &a).unwrap();
        let e = exact_eig_dense(&a);
        let cov = &l * l.transpose();
        let lra = lra_covariance(e.clone(), &l).unwrap();
        let lru = lru_covariance(e, &l, &cov).unwrap();
        assert!(covariance_error(&lra.covariance(), &exact).unwrap() < 1e-10);
        assert!(covariance_error(&lru.covariance(), &exact).unwrap() < 1e-10);
        let x = rng::normal_vector(&mut r, 6);
        assert!((lru.apply(&x) - &exact * &x).norm() < 1e-10 * x.norm());
    }

    #[test]
    fn large_eigenvalue_collapses_variance() {
        let e = EigenPairs::new(2, vec![1e8], vec![Vector::from_vec(vec![1.0, 0.0])]).unwrap();
        let p = lru_covariance(e, &Matrix::identity(2, 2), &Matrix::identity(2, 2))
            .unwrap()
            .covariance();
        assert!(p[(0, 0)].abs() < 1e-6);
        assert_eq!(p[(1, 1)], 1.0);
    }

    #[test]
    fn error_metrics() {
        let a = Vector::from_vec(vec![1.0, 2.0]);
        assert_eq!(increment_error(&a, &a).unwrap(), 0.0);
        let b = Vector::from_vec(vec![2.0, 2.0]);
        assert_eq!(increment_error(&b, &a).unwrap(), 1.0);
        let p = Matrix::identity(3, 3);
        assert_eq!(covariance_error(&p, &p).unwrap(), 0.0);
        assert_eq!(covariance_error(&Matrix::zeros(3, 3), &p).unwrap(), 1.0);
        assert!(covariance_error(&Matrix::zeros(2, 2), &p).is_err());
    }
}
