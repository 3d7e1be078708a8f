//! Small dense helpers shared by the solver blocks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (a + a.adjoint()).scale(0.5)
}

/// Smallest and largest eigenvalue of the Hermitian part of `a`.
pub fn hermitian_eigen_range(a: &DMatrix<Complex64>) -> (f64, f64) {
    if a.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

pub fn real_eigen_range(a: &nalgebra::DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sym = (a + a.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

pub fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Checks Hermitian positive semidefiniteness up to `rel_tol · max|a_ij|`.
pub fn is_hermitian_psd(a: &DMatrix<Complex64>, rel_tol: f64) -> bool {
    let scale = max_abs(a);
    if scale == 0.0 {
        return true;
    }
    let asym = max_abs(&(a - a.adjoint()));
    if asym > rel_tol.max(1e-12) * scale * 10.0 {
        return false;
    }
    hermitian_eigen_range(a).0 >= -rel_tol * scale
}

/// `a bᴴ`.
pub fn outer(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DMatrix<Complex64> {
    a * b.adjoint()
}

/// `xᴴ A x` (real part).
pub fn quad_form(a: &DMatrix<Complex64>, x: &DVector<Complex64>) -> f64 {
    x.dotc(&(a * x)).re
}

/// Re{aᴴ b}.
pub fn re_inner(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_range_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]));
        let (lo, hi) = hermitian_eigen_range(&a);
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        assert!(!is_hermitian_psd(&a, 1e-9));
    }

    #[test]
    fn outer_product_is_psd() {
        let v = DVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)]);
        assert!(is_hermitian_psd(&outer(&v, &v), 1e-9));
        assert!((quad_form(&outer(&v, &v), &v) - v.norm_squared().powi(2)).abs() < 1e-12);
    }
}
