//! Small dense kernels shared by the solvers.

use alloc::vec::Vec;

use nalgebra::SymmetricEigen;

use crate::{Matrix, Vector};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Symmetric eigendecomposition with eigenvalues sorted in decreasing order.
///
/// The input is symmetrized first; round-off asymmetry from products such as
/// `QᵀAQ` would otherwise leak into the eigenvectors.
pub fn sym_eig_desc(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Orthonormalizes `cols` against `basis` and against each other using
/// modified Gram-Schmidt with one reorthogonalization pass.
///
/// A column whose norm after projection is below `drop_tol * scale` is
/// discarded. Returned vectors are orthonormal and orthogonal to `basis`,
/// which must already be orthonormal.
pub fn orthonormalize_against(
    basis: &[Vector],
    cols: &[Vector],
    drop_tol: f64,
    scale: f64,
) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut w = c.clone();
        for _ in 0..2 {
            for q in basis.iter().chain(out.iter()) {
                let h = q.dot(&w);
                w.axpy(-h, q, 1.0);
            }
        }
        let nrm = w.norm();
        if nrm > drop_tol * scale && nrm > 0.0 {
            w /= nrm;
            out.push(w);
        }
    }
    out
}

/// Largest column norm, used as the reference scale for dropping columns.
pub fn max_norm(cols: &[Vector]) -> f64 {
    cols.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Builds a matrix whose columns are `cols` (all of length `rows`).
pub fn columns_to_matrix(rows: usize, cols: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// `Σ_i w_i u_i u_iᵀ x` for orthonormal `u_i`, without forming the matrix.
pub fn low_rank_apply(vectors: &[Vector], weights: &[f64], x: &Vector) -> Vector {
    let mut out = Vector::zeros(x.len());
    for (u, &w) in vectors.iter().zip(weights) {
        let c = w * u.dot(x);
        out.axpy(c, u, 1.0);
    }
    out
}

/// Largest entry of `|QᵀQ - I|`.
pub fn orthonormality_defect(vectors: &[Vector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dot(b) - target).abs());
        }
    }
    worst
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}
