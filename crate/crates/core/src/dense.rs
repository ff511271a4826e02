//! Dense linear-algebra helpers used by the oracles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// `exp(scale · H)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<Complex64>, scale: Complex64) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| (scale * e).exp()),
    ));
    v * d * v.adjoint()
}

/// Ascending eigenvalues and matching eigenvectors (as columns).
pub fn eigh(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = h.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|<a|b>|^2 / (|a|^2 |b|^2)`.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut ov = Complex64::new(0.0, 0.0);
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        ov += x.conj() * y;
        na += x.norm_sqr();
        nb += y.norm_sqr();
    }
    ov.norm_sqr() / (na * nb)
}

/// Kronecker product, left factor on the more significant bits.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}
