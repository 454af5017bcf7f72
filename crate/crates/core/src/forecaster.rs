//! Multi-horizon probabilistic prediction.
//!
//! One step combines the dynamics-propagated Gaussian (the load-transition
//! model pushed through the previous step's predictive distribution,
//! covariance `W1`) with the observation-model Gaussian (covariance `W2`)
//! into the predictive Gaussian:
//!
//! `mean = W1 (W1+W2)⁻¹ M_r u_r + W2 (W1+W2)⁻¹ M_s û_s`
//! `cov  = W2 (W1+W2)⁻¹ W1`
//!
//! with `W1 = Σ_s + (M_s N) Ê_prev (M_s N)ᵀ`, `W2 = Σ_r`, and
//! `û_s = [1, mean_prev]`. The recursion starts from the last observed loads
//! with zero covariance.

use chrono::{DateTime, Duration, FixedOffset};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, TempContext};
use crate::learner::{ConditionalModel, ModelBank};
use crate::linalg;

/// Condition-estimate threshold beyond which the fusion solve gets jitter.
pub const FUSION_CONDITION_LIMIT: f64 = 1e12;

/// One forecast horizon step: a Gaussian over the K entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastStep {
    pub target_time: DateTime<FixedOffset>,
    pub calendar_type: usize,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// A multi-horizon forecast emitted at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub issued_at: DateTime<FixedOffset>,
    pub steps: Vec<ForecastStep>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

/// The `(K+1) x K` selector `[0; I_K]` that embeds a load vector into the
/// transition-feature slot, skipping the intercept: `N v = [0, v]`.
pub fn selector_matrix(entity_count: usize) -> DMatrix<f64> {
    let mut n = DMatrix::zeros(entity_count + 1, entity_count);
    for k in 0..entity_count {
        n[(k + 1, k)] = 1.0;
    }
    n
}

struct FusionSolve {
    /// `W1 (W1+W2)⁻¹`
    w1_weight: DMatrix<f64>,
    jittered: bool,
}

/// Solves the fusion weights for symmetric PSD `w1`, `w2` via a Cholesky
/// factorization of `W1+W2`. If the factorization fails or its condition
/// estimate exceeds [`FUSION_CONDITION_LIMIT`], retries once with
/// `ε·I` added, `ε = 1e-8 · trace(W1+W2)/K`.
fn solve_fusion_weights(w1: &DMatrix<f64>, w2: &DMatrix<f64>) -> Result<FusionSolve> {
    let k = w1.nrows();
    let total = w1 + w2;

    let attempt = |m: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let chol = m.clone().cholesky()?;
        let diag = chol.l_dirty().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for d in diag.iter() {
            if !d.is_finite() || *d <= 0.0 {
                return None;
            }
            lo = lo.min(*d);
            hi = hi.max(*d);
        }
        if (hi / lo).powi(2) > FUSION_CONDITION_LIMIT {
            return None;
        }
        // X = (W1+W2)⁻¹ W1, so W1 (W1+W2)⁻¹ = Xᵀ.
        Some(chol.solve(w1).transpose())
    };

    if let Some(w1_weight) = attempt(&total) {
        return Ok(FusionSolve {
            w1_weight,
            jittered: false,
        });
    }
    let eps = 1e-8 * total.trace() / k as f64;
    let jittered = &total + DMatrix::from_diagonal_element(k, k, eps);
    if let Some(w1_weight) = attempt(&jittered) {
        return Ok(FusionSolve {
            w1_weight,
            jittered: true,
        });
    }
    Err(Error::numerical(
        "fusion covariance W1+W2 is singular even after jitter",
    ))
}

/// One prediction step: fuses the transition model's propagated Gaussian
/// with the observation model's Gaussian. Returns the predictive mean and
/// covariance for the next hour.
pub fn predict_step(
    load_model: &ConditionalModel,
    obs_model: &ConditionalModel,
    prev_mean: &DVector<f64>,
    prev_cov: &DMatrix<f64>,
    u_r: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let k = load_model.target_dim();
    if obs_model.target_dim() != k {
        return Err(Error::numerical(
            "load and observation models disagree on entity count",
        ));
    }
    if prev_mean.len() != k || prev_cov.nrows() != k || prev_cov.ncols() != k {
        return Err(Error::numerical("previous forecast has wrong dimensions"));
    }
    if u_r.len() != obs_model.feature_dim() {
        return Err(Error::numerical(format!(
            "observation feature vector has {} entries, model expects {}",
            u_r.len(),
            obs_model.feature_dim()
        )));
    }

    let u_hat_s = features::build_feature_s(prev_mean)
        .map_err(|e| Error::numerical(format!("propagated mean unusable: {}", e)))?;
    let mu_s = load_model.predict_mean(&u_hat_s);
    let mu_r = obs_model.predict_mean(u_r);

    // M_s N drops the intercept column: the K x K load-feedback block.
    let feedback = load_model.mean_map().columns(1, k);
    let w1 = linalg::symmetrize(
        &(load_model.covariance() + &feedback * prev_cov * feedback.transpose()),
    );
    let w2 = obs_model.covariance();

    let solve = solve_fusion_weights(&w1, w2)?;
    let w1_weight = &solve.w1_weight;

    let mean = w1_weight * &mu_r + &mu_s - w1_weight * &mu_s;
    // W2 (W1+W2)⁻¹ W1 = W1 − W1 (W1+W2)⁻¹ W1.
    let cov = linalg::symmetrize(&(&w1 - w1_weight * &w1));

    if !linalg::all_finite_vec(&mean) || !linalg::all_finite_mat(&cov) {
        return Err(Error::numerical("forecast step produced non-finite output"));
    }
    Ok((mean, cov))
}

/// Iterates [`predict_step`] over `1..=L`, selecting each hour's models by
/// calendar type and building observation features from the supplied
/// temperature path against a read-only context snapshot.
///
/// `temps_path` holds one row per horizon step (observed temperatures used
/// as the future-observation proxies); `holiday_path` the matching flags.
pub fn predict_horizon(
    bank: &ModelBank,
    ctx: &TempContext,
    issued_at: DateTime<FixedOffset>,
    last_loads: &DVector<f64>,
    temps_path: &DMatrix<f64>,
    holiday_path: &[bool],
) -> Result<Forecast> {
    let k = bank.entity_count();
    let horizon = temps_path.nrows();
    if horizon == 0 {
        return Err(Error::config("forecast horizon must be at least 1"));
    }
    if temps_path.ncols() != k || last_loads.len() != k {
        return Err(Error::numerical("forecast inputs disagree on entity count"));
    }
    if holiday_path.len() != horizon {
        return Err(Error::numerical(
            "holiday path must cover every horizon step",
        ));
    }

    let mut mean = last_loads.clone();
    let mut cov = DMatrix::zeros(k, k);
    let mut steps = Vec::with_capacity(horizon);
    for i in 0..horizon {
        let target_time = issued_at + Duration::hours(i as i64 + 1);
        let c = bank.scheme().calendar_type(target_time, holiday_path[i]);
        let obs_model = bank.obs_model(c);
        if !obs_model.is_trained() {
            return Err(Error::NotReady(format!(
                "observation model for calendar type {} has never been updated",
                c
            )));
        }
        let u_r = features::build_feature_r(&temps_path.row(i).transpose(), ctx, c)?;
        let (next_mean, next_cov) = predict_step(bank.load_model(c), obs_model, &mean, &cov, &u_r)
            .map_err(|e| Error::numerical(format!("{} (calendar type {}, at {})", e, c, target_time)))?;
        mean = next_mean;
        cov = next_cov;
        steps.push(ForecastStep {
            target_time,
            calendar_type: c,
            mean: mean.clone(),
            covariance: cov.clone(),
        });
    }
    Ok(Forecast { issued_at, steps })
}
