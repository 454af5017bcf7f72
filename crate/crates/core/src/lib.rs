//! Online multi-entity probabilistic load forecasting.
//!
//! The engine maintains, per calendar type, two conditional Gaussian models
//! over the joint loads of K entities: a load-transition model (current loads
//! given the previous hour's loads) and an observation model (current loads
//! given temperature-shift features). Both are updated online by
//! exponentially-forgetting recursive estimators, and multi-horizon Gaussian
//! forecasts are produced by a closed-form fusion recursion.
//!
//! The crate also ships the surrounding tooling: a backtest harness with
//! MAPE/RMSE/error-CDF reporting, a persistence baseline, a seeded synthetic
//! data generator, dense-solve oracles used by the test suites, CSV
//! ingestion, and snapshot persistence.

pub mod backtest;
pub mod calendar;
pub mod config;
pub mod error;
pub mod features;
pub mod forecaster;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod panel;
pub mod sim;
pub mod snapshot;

pub use backtest::{persistence_baseline, run_backtest, BacktestConfig, BacktestRun};
pub use calendar::{calendar_type, CalendarScheme};
pub use error::{Error, Result};
pub use features::{build_feature_r, build_feature_s, TempContext, TempMeanRule, Thresholds};
pub use forecaster::{predict_horizon, predict_step, Forecast, ForecastStep};
pub use learner::{ConditionalModel, ModelBank};
pub use panel::EntityPanel;
pub use sim::{generate, SyntheticSpec};
