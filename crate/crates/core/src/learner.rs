//! Online estimation of the conditional Gaussian models.
//!
//! Each [`ConditionalModel`] tracks one conditional distribution
//! `N(M u, Σ)` for one calendar type through an exponentially-forgetting
//! recursion: the mean map `M` follows a recursive least-squares update
//! driven by the state matrix `P` (the running inverse of the λ-weighted
//! feature Gram matrix), and the covariance `Σ` is a γ-normalized
//! exponentially weighted average of scaled residual outer products.

use chrono::{DateTime, FixedOffset};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calendar::CalendarScheme;
use crate::error::{Error, Result};
use crate::features::{self, TempContext, OBS_FEATURES_PER_ENTITY};
use crate::linalg;

/// Recursive estimator state for one conditional Gaussian `N(M u, Σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    mean_map: DMatrix<f64>,   // M: K x D
    covariance: DMatrix<f64>, // Σ: K x K
    state: DMatrix<f64>,      // P: D x D
    effective_samples: f64,   // γ
    forgetting: f64,          // λ
}

impl ConditionalModel {
    /// Fresh estimator: `M = 0`, `Σ = 0`, `P = I_D`, `γ = 0`.
    pub fn new(target_dim: usize, feature_dim: usize, forgetting: f64) -> Result<Self> {
        if target_dim == 0 || feature_dim == 0 {
            return Err(Error::config("model dimensions must be positive"));
        }
        if !(forgetting > 0.0 && forgetting <= 1.0) {
            return Err(Error::config(format!(
                "forgetting factor {} outside valid range (0,1]",
                forgetting
            )));
        }
        Ok(ConditionalModel {
            mean_map: DMatrix::zeros(target_dim, feature_dim),
            covariance: DMatrix::zeros(target_dim, target_dim),
            state: DMatrix::identity(feature_dim, feature_dim),
            effective_samples: 0.0,
            forgetting,
        })
    }

    /// Builds a model from explicit parameters (snapshot restore, tests,
    /// injection of known-true parameters).
    pub fn with_parameters(
        mean_map: DMatrix<f64>,
        covariance: DMatrix<f64>,
        state: DMatrix<f64>,
        effective_samples: f64,
        forgetting: f64,
    ) -> Result<Self> {
        let k = mean_map.nrows();
        let d = mean_map.ncols();
        if covariance.nrows() != k || covariance.ncols() != k {
            return Err(Error::config("covariance shape must match target dimension"));
        }
        if state.nrows() != d || state.ncols() != d {
            return Err(Error::config("state matrix shape must match feature dimension"));
        }
        if !(forgetting > 0.0 && forgetting <= 1.0) {
            return Err(Error::config(format!(
                "forgetting factor {} outside valid range (0,1]",
                forgetting
            )));
        }
        if effective_samples < 0.0 {
            return Err(Error::config("effective sample size must be nonnegative"));
        }
        Ok(ConditionalModel {
            mean_map,
            covariance,
            state,
            effective_samples,
            forgetting,
        })
    }

    /// Target dimension K.
    pub fn target_dim(&self) -> usize {
        self.mean_map.nrows()
    }

    /// Feature dimension D.
    pub fn feature_dim(&self) -> usize {
        self.mean_map.ncols()
    }

    /// Mean map M.
    pub fn mean_map(&self) -> &DMatrix<f64> {
        &self.mean_map
    }

    /// Covariance Σ.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// State matrix P (running inverse of the weighted feature Gram).
    pub fn state_matrix(&self) -> &DMatrix<f64> {
        &self.state
    }

    /// Effective sample size γ.
    pub fn effective_samples(&self) -> f64 {
        self.effective_samples
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    /// Whether the model has absorbed at least one update (γ reaches 1 on
    /// the first update and never falls below it afterwards).
    pub fn is_trained(&self) -> bool {
        self.effective_samples >= 1.0
    }

    /// Conditional mean `M u`.
    pub fn predict_mean(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.mean_map * u
    }

    /// Folds one `(u, s)` pair into the estimator.
    ///
    /// With `e = s − M u`, `q = uᵀ P u`, `g = λ + q`:
    /// `γ' = λγ + 1` first, then
    /// `M' = M + e uᵀ P / g` (pre-update P),
    /// `Σ' = Σ − (Σ − λ² e eᵀ / g²)/γ'` followed by symmetrization and a
    /// PSD projection, and finally `P' = (P − P u uᵀ P / g)/λ`.
    pub fn update(&mut self, u: &DVector<f64>, s: &DVector<f64>) -> Result<()> {
        if u.len() != self.feature_dim() {
            return Err(Error::numerical(format!(
                "feature vector has {} entries, model expects {}",
                u.len(),
                self.feature_dim()
            )));
        }
        if s.len() != self.target_dim() {
            return Err(Error::numerical(format!(
                "target vector has {} entries, model expects {}",
                s.len(),
                self.target_dim()
            )));
        }
        if !linalg::all_finite_vec(u) || !linalg::all_finite_vec(s) {
            return Err(Error::numerical("non-finite update input"));
        }

        let lambda = self.forgetting;
        let error = s - &self.mean_map * u;
        let pu = &self.state * u;
        let gain_denom = lambda + u.dot(&pu);

        self.effective_samples = lambda * self.effective_samples + 1.0;

        self.mean_map += (&error * pu.transpose()) / gain_denom;

        let residual_scale = (lambda * lambda) / (gain_denom * gain_denom);
        let shrunk = &self.covariance
            - (&self.covariance - residual_scale * (&error * error.transpose()))
                / self.effective_samples;
        self.covariance = linalg::psd_project(&shrunk);

        self.state = linalg::symmetrize(&((&self.state - (&pu * pu.transpose()) / gain_denom) / lambda));

        if !linalg::all_finite_mat(&self.mean_map)
            || !linalg::all_finite_mat(&self.covariance)
            || !linalg::all_finite_mat(&self.state)
            || !self.effective_samples.is_finite()
        {
            return Err(Error::numerical("estimator state became non-finite"));
        }
        Ok(())
    }
}

/// The full parameter set: per calendar type, the load-transition model
/// (features `[1, s_{t-1}]`, D = K+1) and the observation model (features
/// `u_r`, D = K·R).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBank {
    scheme: CalendarScheme,
    entity_count: usize,
    load_models: Vec<ConditionalModel>,
    obs_models: Vec<ConditionalModel>,
}

impl ModelBank {
    pub fn new(
        scheme: CalendarScheme,
        entity_count: usize,
        lambda_load: f64,
        lambda_obs: f64,
    ) -> Result<Self> {
        if entity_count == 0 {
            return Err(Error::config("model bank needs at least one entity"));
        }
        let c = scheme.type_count();
        let mut load_models = Vec::with_capacity(c);
        let mut obs_models = Vec::with_capacity(c);
        for _ in 0..c {
            load_models.push(ConditionalModel::new(
                entity_count,
                entity_count + 1,
                lambda_load,
            )?);
            obs_models.push(ConditionalModel::new(
                entity_count,
                entity_count * OBS_FEATURES_PER_ENTITY,
                lambda_obs,
            )?);
        }
        Ok(ModelBank {
            scheme,
            entity_count,
            load_models,
            obs_models,
        })
    }

    pub fn scheme(&self) -> CalendarScheme {
        self.scheme
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn type_count(&self) -> usize {
        self.scheme.type_count()
    }

    pub fn load_model(&self, calendar_type: usize) -> &ConditionalModel {
        &self.load_models[calendar_type - 1]
    }

    pub fn obs_model(&self, calendar_type: usize) -> &ConditionalModel {
        &self.obs_models[calendar_type - 1]
    }

    pub fn load_model_mut(&mut self, calendar_type: usize) -> &mut ConditionalModel {
        &mut self.load_models[calendar_type - 1]
    }

    pub fn obs_model_mut(&mut self, calendar_type: usize) -> &mut ConditionalModel {
        &mut self.obs_models[calendar_type - 1]
    }

    /// Absorbs one hour of data: updates the calendar type's load-transition
    /// model with `([1, s_prev], s_now)`, its observation model with
    /// `(u_r(temps_now), s_now)`, and then folds the temperatures into the
    /// running means. The observation features are built before the context
    /// update, so indicators compare against strictly past temperatures.
    pub fn learn_step(
        &mut self,
        ctx: &mut TempContext,
        t: DateTime<FixedOffset>,
        holiday: bool,
        s_prev: &DVector<f64>,
        s_now: &DVector<f64>,
        temps_now: &DVector<f64>,
    ) -> Result<()> {
        let c = self.scheme.calendar_type(t, holiday);
        let here = |e: Error| Error::numerical(format!("{} (calendar type {}, at {})", e, c, t));
        let u_s = features::build_feature_s(s_prev)?;
        let u_r = features::build_feature_r(temps_now, ctx, c)?;
        self.load_models[c - 1].update(&u_s, s_now).map_err(here)?;
        self.obs_models[c - 1].update(&u_r, s_now).map_err(here)?;
        ctx.observe(c, temps_now)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Thresholds, TempMeanRule};
    use approx::assert_relative_eq;
    use chrono::{Duration, TimeZone};

    fn dv(values: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(values)
    }

    #[test]
    fn hand_evaluated_first_update() {
        // K=1, D=1, λ=1, M=[0], P=[1], γ=0; observe u=[1], s=[5]:
        // e=5, q=1, g=2 → M'=2.5, P'=0.5, γ'=1, Σ'=λ²·25/4 = 6.25.
        let mut model = ConditionalModel::new(1, 1, 1.0).unwrap();
        model.update(&dv(&[1.0]), &dv(&[5.0])).unwrap();
        assert_relative_eq!(model.mean_map()[(0, 0)], 2.5, max_relative = 1e-15);
        assert_relative_eq!(model.state_matrix()[(0, 0)], 0.5, max_relative = 1e-15);
        assert_eq!(model.effective_samples(), 1.0);
        assert_relative_eq!(model.covariance()[(0, 0)], 6.25, max_relative = 1e-15);
    }

    #[test]
    fn zero_error_update_leaves_mean_map_and_shrinks_covariance() {
        let mut model = ConditionalModel::new(2, 3, 0.9).unwrap();
        model
            .update(&dv(&[1.0, 2.0, -1.0]), &dv(&[1.0, 0.5]))
            .unwrap();
        let m_before = model.mean_map().clone();
        let sigma_before = model.covariance().clone();
        let gamma_next = 0.9 * model.effective_samples() + 1.0;
        // Target chosen so e = s − M u = 0.
        let u = dv(&[0.5, -1.0, 2.0]);
        let s = model.predict_mean(&u);
        model.update(&u, &s).unwrap();
        assert_relative_eq!(
            (model.mean_map() - &m_before).abs().max(),
            0.0,
            epsilon = 1e-14
        );
        let expected_sigma = &sigma_before - &sigma_before / gamma_next;
        assert_relative_eq!(
            (model.covariance() - expected_sigma).abs().max(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn repeated_identical_sample_is_idempotent_for_mean_map() {
        let mut model = ConditionalModel::new(2, 2, 1.0).unwrap();
        let u = dv(&[1.0, 3.0]);
        let s = dv(&[2.0, -1.0]);
        model.update(&u, &s).unwrap();
        let m_after_first = model.mean_map().clone();
        model.update(&u, &s).unwrap();
        assert_relative_eq!(
            (model.mean_map() - &m_after_first).abs().max(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noiseless_data_recovers_exact_interpolant() {
        // λ=1, spanning features, targets from a fixed generator matrix:
        // after the Gram is full rank the estimate keeps shrinking toward the
        // generator; residuals on seen data must drop below 1e-10.
        let truth = DMatrix::from_row_slice(2, 3, &[0.5, -1.0, 2.0, 1.5, 0.25, -0.75]);
        let mut model = ConditionalModel::new(2, 3, 1.0).unwrap();
        let mut inputs = Vec::new();
        for i in 0..400 {
            let x = (i as f64 * 0.37).sin() * 3.0;
            let y = (i as f64 * 0.61).cos() * 2.0;
            let u = dv(&[1.0, x, y]);
            let s = &truth * &u;
            model.update(&u, &s).unwrap();
            inputs.push(u);
        }
        for u in &inputs {
            let r = (&truth * u - model.predict_mean(u)).abs().max();
            assert!(r < 1e-10, "residual {}", r);
        }
    }

    #[test]
    fn gamma_follows_geometric_sum() {
        for &lambda in &[0.7, 0.8, 1.0] {
            let mut model = ConditionalModel::new(1, 1, lambda).unwrap();
            for n in 1..=120usize {
                model.update(&dv(&[1.0]), &dv(&[0.3])).unwrap();
                let closed = if lambda == 1.0 {
                    n as f64
                } else {
                    (1.0 - lambda.powi(n as i32)) / (1.0 - lambda)
                };
                assert_relative_eq!(model.effective_samples(), closed, max_relative = 1e-12);
                if lambda < 1.0 {
                    assert!(model.effective_samples() < 1.0 / (1.0 - lambda));
                }
            }
        }
    }

    #[test]
    fn covariance_stays_psd_under_adversarial_updates() {
        let mut model = ConditionalModel::new(3, 2, 0.7).unwrap();
        for i in 0..200 {
            let u = dv(&[1.0, (i as f64 * 1.31).sin() * 4.0]);
            let s = dv(&[
                (i as f64 * 0.17).sin() * 10.0,
                (i as f64 * 0.29).cos() * 10.0,
                if i % 2 == 0 { 8.0 } else { -8.0 },
            ]);
            model.update(&u, &s).unwrap();
            let min_eig = crate::linalg::min_eigenvalue(model.covariance());
            assert!(min_eig >= -1e-10, "min eigenvalue {}", min_eig);
        }
    }

    #[test]
    fn update_rejects_dimension_mismatch_and_nan() {
        let mut model = ConditionalModel::new(2, 2, 0.8).unwrap();
        assert!(model.update(&dv(&[1.0]), &dv(&[1.0, 2.0])).is_err());
        assert!(model.update(&dv(&[1.0, 2.0]), &dv(&[1.0])).is_err());
        assert!(model
            .update(&dv(&[1.0, f64::NAN]), &dv(&[1.0, 2.0]))
            .is_err());
    }

    #[test]
    fn learn_step_touches_only_the_matching_calendar_type() {
        let scheme = CalendarScheme::WeekdayWeekend48;
        let mut bank = ModelBank::new(scheme, 2, 0.8, 0.7).unwrap();
        let mut ctx = TempContext::new(
            scheme.type_count(),
            2,
            Thresholds::default(),
            TempMeanRule::Cumulative,
        );
        let before = bank.clone();
        let start = FixedOffset::east_opt(0)
            .unwrap()
            .with_ymd_and_hms(2016, 1, 5, 3, 0, 0)
            .unwrap();
        bank.learn_step(
            &mut ctx,
            start,
            false,
            &dv(&[1.0, 2.0]),
            &dv(&[1.1, 2.2]),
            &dv(&[50.0, 50.0]),
        )
        .unwrap();
        bank.learn_step(
            &mut ctx,
            start + Duration::hours(1),
            false,
            &dv(&[1.1, 2.2]),
            &dv(&[1.2, 2.1]),
            &dv(&[51.0, 49.0]),
        )
        .unwrap();
        // Hours 3 and 4 on a weekday map to calendar types 4 and 5.
        for c in 1..=48 {
            let touched = c == 4 || c == 5;
            assert_eq!(
                *bank.load_model(c) != *before.load_model(c),
                touched,
                "load model {} touched={}",
                c,
                touched
            );
            assert_eq!(*bank.obs_model(c) != *before.obs_model(c), touched);
        }
    }
}
