//! Small dense-matrix helpers shared by the learner and the forecaster.

use nalgebra::{DMatrix, DVector};

/// Returns the symmetric part `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Projects a matrix onto the symmetric positive-semidefinite cone.
///
/// The input is symmetrized first. If the spectrum is already nonnegative the
/// symmetrized matrix is returned unchanged, so repeated projection of an
/// already-PSD matrix does not drift. Otherwise negative eigenvalues are
/// clipped to zero and the matrix is recomposed.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(m);
    let mut eigen = sym.clone().symmetric_eigen();
    if eigen.eigenvalues.iter().all(|&v| v >= 0.0) {
        return sym;
    }
    for v in eigen.eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    symmetrize(&eigen.recompose())
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

pub fn all_finite_mat(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn all_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// `A` such that `A Aᵀ` equals the given PSD matrix, via the symmetric
/// eigendecomposition. Tolerates slightly negative roundoff eigenvalues by
/// clamping them to zero, so it works for rank-deficient covariances
/// (including the all-zero matrix).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eigen = symmetrize(m).symmetric_eigen();
    let roots = eigen.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eigen.eigenvectors * DMatrix::from_diagonal(&roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_project_leaves_psd_input_untouched() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = psd_project(&m);
        assert_eq!(m, p);
    }

    #[test]
    fn psd_project_clips_negative_spectrum() {
        // Eigenvalues 3 and -1.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = psd_project(&m);
        assert!(min_eigenvalue(&p) >= -1e-12);
        // Projection is idempotent up to roundoff.
        let pp = psd_project(&p);
        assert!((pp - &p).abs().max() <= 1e-12);
    }

    #[test]
    fn psd_sqrt_recovers_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let root = psd_sqrt(&a);
        let back = &root * root.transpose();
        assert!((back - &a).abs().max() < 1e-12);
    }

    #[test]
    fn psd_sqrt_of_zero_is_zero() {
        let z = DMatrix::zeros(3, 3);
        assert_eq!(psd_sqrt(&z), z);
    }
}
