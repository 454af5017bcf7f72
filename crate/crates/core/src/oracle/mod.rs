//! Independent reference solutions used by the test suites and the
//! acceptance criteria: a dense exponentially weighted least-squares solve,
//! the precision-form Gaussian product, and a plain-scalar single-entity
//! recursion. These deliberately avoid the recursive implementation paths
//! they are used to check.

pub mod single_task;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense exponentially weighted least-squares solution.
#[derive(Debug, Clone)]
pub struct WlsSolution {
    /// Minimizer of `Σ λ^{n−i} ‖s_i − M u_i‖²` plus the prior term.
    pub mean_map: DMatrix<f64>,
    /// `(Σ λ^{n−i} u_i u_iᵀ + prior)⁻¹` — the weighted inverse Gram.
    pub state: DMatrix<f64>,
    /// `Σ λ^{n−i}`.
    pub effective_samples: f64,
    /// Condition estimate of the regularized Gram matrix.
    pub condition: f64,
}

/// Solves the weighted normal equations with prior precision `λⁿ · I_D`
/// (the batch counterpart of the recursive estimator started at `P₀ = I`).
pub fn wls_oracle(us: &[DVector<f64>], ss: &[DVector<f64>], lambda: f64) -> Result<WlsSolution> {
    wls_oracle_with_prior(us, ss, lambda, 1.0)
}

/// Same as [`wls_oracle`] with the prior precision scaled by `prior_scale`;
/// scale 0 gives the textbook unregularized solution (requires a full-rank
/// Gram).
pub fn wls_oracle_with_prior(
    us: &[DVector<f64>],
    ss: &[DVector<f64>],
    lambda: f64,
    prior_scale: f64,
) -> Result<WlsSolution> {
    if us.is_empty() || us.len() != ss.len() {
        return Err(Error::data(
            "weighted least squares needs matching, non-empty inputs",
        ));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::config(format!(
            "forgetting factor {} outside valid range (0,1]",
            lambda
        )));
    }
    let n = us.len();
    let d = us[0].len();
    let k = ss[0].len();

    let prior_weight = prior_scale * lambda.powi(n as i32);
    let mut gram = DMatrix::from_diagonal_element(d, d, prior_weight);
    let mut cross = DMatrix::zeros(k, d);
    let mut effective_samples = 0.0;
    for (i, (u, s)) in us.iter().zip(ss.iter()).enumerate() {
        if u.len() != d || s.len() != k {
            return Err(Error::data("inconsistent vector dimensions in oracle input"));
        }
        let w = lambda.powi((n - 1 - i) as i32);
        gram += w * u * u.transpose();
        cross += w * s * u.transpose();
        effective_samples += w;
    }

    let eigen = gram.clone().symmetric_eigen();
    let max_eig = eigen.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min_eig = eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(Error::numerical(
            "weighted Gram matrix is singular (no prior mass to regularize it)",
        ));
    }
    let condition = max_eig / min_eig;

    let state = gram
        .try_inverse()
        .ok_or_else(|| Error::numerical("weighted Gram matrix inversion failed"))?;
    let mean_map = &cross * &state;
    Ok(WlsSolution {
        mean_map,
        state,
        effective_samples,
        condition,
    })
}

/// Posterior of combining `N(mu1, w1)` with `N(mu2, w2)` in precision form:
/// `cov = (W1⁻¹ + W2⁻¹)⁻¹`, `mean = cov (W1⁻¹ mu1 + W2⁻¹ mu2)`.
pub fn fusion_oracle(
    mu1: &DVector<f64>,
    w1: &DMatrix<f64>,
    mu2: &DVector<f64>,
    w2: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = mu1.len();
    if mu2.len() != k || w1.nrows() != k || w1.ncols() != k || w2.nrows() != k || w2.ncols() != k {
        return Err(Error::data("fusion oracle inputs disagree on dimension"));
    }
    let inv1 = w1
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("W1 is not symmetric positive definite"))?
        .inverse();
    let inv2 = w2
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical("W2 is not symmetric positive definite"))?
        .inverse();
    let precision = &inv1 + &inv2;
    let cov = precision
        .cholesky()
        .ok_or_else(|| Error::numerical("combined precision is not positive definite"))?
        .inverse();
    let mean = &cov * (&inv1 * mu1 + &inv2 * mu2);
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dv(values: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(values)
    }

    #[test]
    fn single_sample_blends_with_unit_prior() {
        // λ=1, D=1, u=[1], s=[5]: (1·1 + 1)⁻¹ · (1·5) = 2.5.
        let sol = wls_oracle(&[dv(&[1.0])], &[dv(&[5.0])], 1.0).unwrap();
        assert_relative_eq!(sol.mean_map[(0, 0)], 2.5, max_relative = 1e-15);
        assert_relative_eq!(sol.state[(0, 0)], 0.5, max_relative = 1e-15);
        assert_eq!(sol.effective_samples, 1.0);
    }

    #[test]
    fn orthogonal_features_recover_generator_on_span() {
        let truth = DMatrix::from_row_slice(1, 2, &[2.0, -3.0]);
        let us = vec![dv(&[1.0, 0.0]), dv(&[0.0, 1.0])];
        let ss: Vec<_> = us.iter().map(|u| &truth * u).collect();
        // Repeat the samples so the data overwhelms the prior.
        let mut us_many = Vec::new();
        let mut ss_many = Vec::new();
        for _ in 0..2000 {
            us_many.extend(us.iter().cloned());
            ss_many.extend(ss.iter().cloned());
        }
        let sol = wls_oracle(&us_many, &ss_many, 1.0).unwrap();
        assert_relative_eq!(sol.mean_map[(0, 0)], 2.0, max_relative = 1e-3);
        assert_relative_eq!(sol.mean_map[(0, 1)], -3.0, max_relative = 1e-3);
        // With the prior disabled the recovery is exact.
        let sol = wls_oracle_with_prior(&us, &ss, 1.0, 0.0).unwrap();
        assert_relative_eq!((sol.mean_map - truth).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn effective_samples_is_geometric_sum() {
        let us = vec![dv(&[1.0]); 3];
        let ss = vec![dv(&[0.0]); 3];
        let sol = wls_oracle(&us, &ss, 0.8).unwrap();
        assert_relative_eq!(sol.effective_samples, 2.44, max_relative = 1e-15);
    }

    #[test]
    fn matches_textbook_ols_without_prior() {
        let us: Vec<_> = (0..40)
            .map(|i| dv(&[1.0, (i as f64 * 0.4).sin(), (i as f64 * 0.9).cos()]))
            .collect();
        let truth = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -0.5, 0.0, -1.5, 0.25]);
        let ss: Vec<_> = us.iter().map(|u| &truth * u).collect();
        let sol = wls_oracle_with_prior(&us, &ss, 1.0, 0.0).unwrap();
        assert!((sol.mean_map - truth).abs().max() < 1e-10);
    }

    #[test]
    fn fusion_of_identical_covariances_averages() {
        let (mean, cov) = fusion_oracle(
            &dv(&[0.0]),
            &DMatrix::identity(1, 1),
            &dv(&[2.0]),
            &DMatrix::identity(1, 1),
        )
        .unwrap();
        assert_relative_eq!(mean[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(cov[(0, 0)], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn uninformative_second_source_returns_first() {
        let w1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
        let (mean, cov) = fusion_oracle(
            &dv(&[1.0, -2.0]),
            &w1,
            &dv(&[100.0, 50.0]),
            &DMatrix::from_diagonal_element(2, 2, 1e12),
        )
        .unwrap();
        assert_relative_eq!(mean[0], 1.0, max_relative = 1e-9);
        assert_relative_eq!(mean[1], -2.0, max_relative = 1e-9);
        assert!((cov - w1).abs().max() < 1e-9);
    }

    #[test]
    fn rejects_non_spd_covariance() {
        let err = fusion_oracle(
            &dv(&[0.0]),
            &DMatrix::from_element(1, 1, -1.0),
            &dv(&[1.0]),
            &DMatrix::identity(1, 1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("positive definite"));
    }
}
