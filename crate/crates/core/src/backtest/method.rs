//! The forecast-method registry.
//!
//! Every method that can be driven through the backtest implements
//! [`ForecastMethod`]: it absorbs hourly observations and emits multi-horizon
//! forecasts on demand. Methods are registered by name and selected at
//! runtime via config or CLI, so the engine and the naive baseline run under
//! the identical emission schedule and metrics.

use chrono::{DateTime, Duration, FixedOffset, Timelike};
use nalgebra::{DMatrix, DVector};

use crate::calendar::CalendarScheme;
use crate::error::{Error, Result};
use crate::features::TempContext;
use crate::forecaster::{predict_horizon, Forecast, ForecastStep};
use crate::learner::ModelBank;

use super::BacktestConfig;

pub const METHOD_ENGINE: &str = "engine";
pub const METHOD_PERSISTENCE: &str = "persistence";

/// An online forecasting strategy: single-writer over its own state,
/// observed strictly in chronological order by the driver.
pub trait ForecastMethod: Send {
    fn name(&self) -> &'static str;

    /// Absorbs the observation arriving at `t`.
    fn observe(
        &mut self,
        t: DateTime<FixedOffset>,
        holiday: bool,
        prev_loads: &DVector<f64>,
        loads: &DVector<f64>,
        temps: &DVector<f64>,
    ) -> Result<()>;

    /// Emits a forecast for the `temps_path.nrows()` hours after `issued_at`.
    fn forecast(
        &self,
        issued_at: DateTime<FixedOffset>,
        last_loads: &DVector<f64>,
        temps_path: &DMatrix<f64>,
        holiday_path: &[bool],
    ) -> Result<Forecast>;

    /// Engine state for snapshotting; `None` for methods without one.
    fn engine_state(&self) -> Option<(&ModelBank, &TempContext)> {
        None
    }
}

/// Registered method names, as accepted by [`build_method`].
pub fn method_names() -> Vec<&'static str> {
    vec![METHOD_ENGINE, METHOD_PERSISTENCE]
}

/// Builds a registered method by name.
pub fn build_method(
    name: &str,
    entity_count: usize,
    cfg: &BacktestConfig,
) -> Result<Box<dyn ForecastMethod>> {
    match name {
        METHOD_ENGINE => Ok(Box::new(EngineMethod::new(cfg, entity_count)?)),
        METHOD_PERSISTENCE => Ok(Box::new(PersistenceMethod::new(cfg.scheme, entity_count))),
        other => Err(Error::config(format!(
            "unknown forecast method '{}' (known: {})",
            other,
            method_names().join(", ")
        ))),
    }
}

/// The multi-entity online engine: per-calendar-type conditional Gaussians
/// updated recursively, forecasts by the fusion recursion.
pub struct EngineMethod {
    bank: ModelBank,
    ctx: TempContext,
}

impl EngineMethod {
    pub fn new(cfg: &BacktestConfig, entity_count: usize) -> Result<Self> {
        let bank = ModelBank::new(cfg.scheme, entity_count, cfg.lambda_s, cfg.lambda_r)?;
        let ctx = TempContext::new(
            cfg.scheme.type_count(),
            entity_count,
            cfg.thresholds(),
            cfg.temp_mean_rule()?,
        );
        Ok(EngineMethod { bank, ctx })
    }

    /// Rebuilds the engine from snapshotted state.
    pub fn from_state(bank: ModelBank, ctx: TempContext) -> Result<Self> {
        if ctx.type_count() != bank.type_count() || ctx.entity_count() != bank.entity_count() {
            return Err(Error::config(
                "temperature context does not match the model bank",
            ));
        }
        Ok(EngineMethod { bank, ctx })
    }

    pub fn bank(&self) -> &ModelBank {
        &self.bank
    }

    pub fn ctx(&self) -> &TempContext {
        &self.ctx
    }
}

impl ForecastMethod for EngineMethod {
    fn name(&self) -> &'static str {
        METHOD_ENGINE
    }

    fn observe(
        &mut self,
        t: DateTime<FixedOffset>,
        holiday: bool,
        prev_loads: &DVector<f64>,
        loads: &DVector<f64>,
        temps: &DVector<f64>,
    ) -> Result<()> {
        self.bank
            .learn_step(&mut self.ctx, t, holiday, prev_loads, loads, temps)
    }

    fn forecast(
        &self,
        issued_at: DateTime<FixedOffset>,
        last_loads: &DVector<f64>,
        temps_path: &DMatrix<f64>,
        holiday_path: &[bool],
    ) -> Result<Forecast> {
        predict_horizon(
            &self.bank,
            &self.ctx,
            issued_at,
            last_loads,
            temps_path,
            holiday_path,
        )
    }

    fn engine_state(&self) -> Option<(&ModelBank, &TempContext)> {
        Some((&self.bank, &self.ctx))
    }
}

/// Naive yardstick: the forecast for `t+i` is the most recently observed
/// load at the same hour of day (for horizons within a day, the load 24
/// hours earlier). Point forecast; zero covariance.
pub struct PersistenceMethod {
    scheme: CalendarScheme,
    entity_count: usize,
    by_hour: Vec<Option<DVector<f64>>>,
}

impl PersistenceMethod {
    pub fn new(scheme: CalendarScheme, entity_count: usize) -> Self {
        PersistenceMethod {
            scheme,
            entity_count,
            by_hour: vec![None; 24],
        }
    }
}

impl ForecastMethod for PersistenceMethod {
    fn name(&self) -> &'static str {
        METHOD_PERSISTENCE
    }

    fn observe(
        &mut self,
        t: DateTime<FixedOffset>,
        _holiday: bool,
        _prev_loads: &DVector<f64>,
        loads: &DVector<f64>,
        _temps: &DVector<f64>,
    ) -> Result<()> {
        if loads.len() != self.entity_count {
            return Err(Error::data("load vector has wrong entity count"));
        }
        self.by_hour[t.hour() as usize] = Some(loads.clone());
        Ok(())
    }

    fn forecast(
        &self,
        issued_at: DateTime<FixedOffset>,
        _last_loads: &DVector<f64>,
        temps_path: &DMatrix<f64>,
        holiday_path: &[bool],
    ) -> Result<Forecast> {
        let horizon = temps_path.nrows();
        if holiday_path.len() != horizon {
            return Err(Error::data("holiday path must cover every horizon step"));
        }
        let mut steps = Vec::with_capacity(horizon);
        for i in 0..horizon {
            let target_time = issued_at + Duration::hours(i as i64 + 1);
            let hour = target_time.hour() as usize;
            let mean = self.by_hour[hour].clone().ok_or_else(|| {
                Error::NotReady(format!("no load observed yet for hour {}", hour))
            })?;
            steps.push(ForecastStep {
                target_time,
                calendar_type: self.scheme.calendar_type(target_time, holiday_path[i]),
                mean,
                covariance: DMatrix::zeros(self.entity_count, self.entity_count),
            });
        }
        Ok(Forecast { issued_at, steps })
    }
}
