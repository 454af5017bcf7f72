//! Online backtest driver: one chronological pass, learning every hour and
//! emitting a multi-horizon forecast at the configured prediction hour once
//! the warm-up period has been consumed. Learning never sees data past the
//! current hour; observed temperatures beyond it are consumed only as the
//! documented future-observation proxies of each emission.

pub mod method;

use chrono::{DateTime, FixedOffset, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{TempMeanRule, Thresholds};
use crate::forecaster::Forecast;
use crate::metrics::{build_report, ErrorSample, MetricsReport, TotalMode};
use crate::panel::EntityPanel;
use crate::snapshot::{EngineSnapshot, ResumePosition};

pub use method::{build_method, method_names, ForecastMethod, METHOD_ENGINE, METHOD_PERSISTENCE};

use crate::calendar::CalendarScheme;

/// Backtest protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    /// Days consumed for learning before the first emission.
    pub warmup_days: usize,
    /// Local clock hour at which a forecast is emitted daily.
    pub prediction_hour: u32,
    /// Horizon steps per emission.
    pub horizon: usize,
    /// Forgetting factor of the load-transition models.
    pub lambda_s: f64,
    /// Forgetting factor of the observation models.
    pub lambda_r: f64,
    /// Temperature-shift threshold δ1 (°F).
    pub delta1_f: f64,
    /// Hot-extremity threshold δ2 (°F).
    pub delta2_f: f64,
    /// Cold-extremity threshold δ3 (°F).
    pub delta3_f: f64,
    pub scheme: CalendarScheme,
    /// Running temperature-mean rule: "cumulative" or "ewma".
    pub temp_mean: String,
    /// Factor for the "ewma" rule.
    pub temp_mean_lambda: Option<f64>,
    /// Forecast method driven by `run_backtest`.
    pub method: String,
    /// Also run the persistence baseline for comparison columns.
    pub run_baseline: bool,
    pub total_mode: TotalMode,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            warmup_days: 30,
            prediction_hour: 11,
            horizon: 24,
            lambda_s: 0.8,
            lambda_r: 0.7,
            delta1_f: 20.0,
            delta2_f: 80.0,
            delta3_f: 20.0,
            scheme: CalendarScheme::WeekdayWeekend48,
            temp_mean: "cumulative".to_string(),
            temp_mean_lambda: None,
            method: METHOD_ENGINE.to_string(),
            run_baseline: true,
            total_mode: TotalMode::Pooled,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup_days < 1 {
            return Err(Error::config("warmup_days must be at least 1"));
        }
        if !(1..=168).contains(&self.horizon) {
            return Err(Error::config(format!(
                "horizon {} outside valid range 1..=168",
                self.horizon
            )));
        }
        if self.prediction_hour > 23 {
            return Err(Error::config(format!(
                "prediction_hour {} outside valid range 0..=23",
                self.prediction_hour
            )));
        }
        for (name, lambda) in [("lambda_s", self.lambda_s), ("lambda_r", self.lambda_r)] {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(Error::config(format!(
                    "{} = {} outside valid range (0,1]",
                    name, lambda
                )));
            }
        }
        self.temp_mean_rule()?;
        if !method_names().contains(&self.method.as_str()) {
            return Err(Error::config(format!(
                "unknown forecast method '{}' (known: {})",
                self.method,
                method_names().join(", ")
            )));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            shift_f: self.delta1_f,
            hot_f: self.delta2_f,
            cold_f: self.delta3_f,
        }
    }

    pub fn temp_mean_rule(&self) -> Result<TempMeanRule> {
        match self.temp_mean.as_str() {
            "cumulative" => Ok(TempMeanRule::Cumulative),
            "ewma" => {
                let lambda = self.temp_mean_lambda.unwrap_or(0.98);
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(Error::config(format!(
                        "temp_mean_lambda = {} outside valid range (0,1)",
                        lambda
                    )));
                }
                Ok(TempMeanRule::Ewma { lambda })
            }
            other => Err(Error::config(format!(
                "unknown temp_mean rule '{}' (known: cumulative, ewma)",
                other
            ))),
        }
    }
}

/// One emitted forecast, tagged with the panel index it was issued from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub issued_index: usize,
    pub forecast: Forecast,
}

/// Everything a backtest produced.
#[derive(Debug, Clone)]
pub struct BacktestRun {
    pub method: String,
    pub report: MetricsReport,
    pub emissions: Vec<Emission>,
    pub snapshot: Option<EngineSnapshot>,
    pub warning: Option<String>,
}

/// Driver knobs beyond the protocol config.
#[derive(Debug, Clone, Default)]
pub struct BacktestOptions {
    /// Capture the engine state right after learning this timestamp.
    pub snapshot_at: Option<DateTime<FixedOffset>>,
    /// Resume from a mid-backtest snapshot instead of a fresh state.
    pub resume: Option<EngineSnapshot>,
    /// Skip storing emissions (metrics are still computed).
    pub discard_emissions: bool,
}

/// Runs the backtest with the method named in the config.
pub fn run_backtest(panel: &EntityPanel, cfg: &BacktestConfig) -> Result<BacktestRun> {
    run_backtest_with(panel, cfg, &cfg.method, BacktestOptions::default())
}

/// Runs the backtest with the persistence baseline under the same schedule.
pub fn persistence_baseline(panel: &EntityPanel, cfg: &BacktestConfig) -> Result<BacktestRun> {
    run_backtest_with(panel, cfg, METHOD_PERSISTENCE, BacktestOptions::default())
}

/// Runs one chronological pass of `method_name` over the panel.
pub fn run_backtest_with(
    panel: &EntityPanel,
    cfg: &BacktestConfig,
    method_name: &str,
    options: BacktestOptions,
) -> Result<BacktestRun> {
    cfg.validate()?;
    let k = panel.entity_count();
    let t_len = panel.len();
    if t_len < 2 {
        return Err(Error::data(
            "insufficient data: need at least two hourly observations",
        ));
    }
    let warmup_len = cfg.warmup_days * 24;
    let horizon = cfg.horizon;

    let (mut method, start_index): (Box<dyn ForecastMethod>, usize) = match options.resume {
        Some(snapshot) => {
            snapshot.validate()?;
            if method_name != METHOD_ENGINE {
                return Err(Error::config(
                    "snapshots can only resume the engine method",
                ));
            }
            if snapshot.entity_ids != panel.entity_ids() {
                return Err(Error::data(
                    "snapshot entities do not match the panel",
                ));
            }
            let position = snapshot.position.clone().ok_or_else(|| {
                Error::config("snapshot has no resume position")
            })?;
            if position.next_index == 0 || position.next_index > t_len {
                return Err(Error::data("snapshot resume position outside the panel"));
            }
            if panel.timestamps()[position.next_index - 1] != position.last_timestamp {
                return Err(Error::data(
                    "snapshot resume timestamp does not line up with the panel",
                ));
            }
            (
                Box::new(method::EngineMethod::from_state(snapshot.bank, snapshot.ctx)?),
                position.next_index,
            )
        }
        None => (build_method(method_name, k, cfg)?, 1),
    };

    let mut samples: Vec<ErrorSample> = Vec::new();
    let mut emissions: Vec<Emission> = Vec::new();
    let mut snapshot_out: Option<EngineSnapshot> = None;
    let mut emitted = 0usize;

    for i in start_index..t_len {
        let t = panel.timestamps()[i];
        method
            .observe(
                t,
                panel.holiday_flags()[i],
                &panel.load_row(i - 1),
                &panel.load_row(i),
                &panel.temperature_row(i),
            )
            .map_err(|e| Error::numerical(format!("{} (observation at {})", e, t)))?;

        if t.hour() == cfg.prediction_hour && i >= warmup_len && i + horizon < t_len {
            let temps_path = panel.temperature_window(i + 1, horizon);
            let holiday_path = &panel.holiday_flags()[i + 1..=i + horizon];
            let forecast = method.forecast(t, &panel.load_row(i), &temps_path, holiday_path)?;
            for (step_idx, step) in forecast.steps.iter().enumerate() {
                for entity in 0..k {
                    samples.push(ErrorSample {
                        entity,
                        horizon_step: step_idx + 1,
                        actual: panel.loads()[(i + 1 + step_idx, entity)],
                        predicted: step.mean[entity],
                    });
                }
            }
            emitted += 1;
            if !options.discard_emissions {
                emissions.push(Emission {
                    issued_index: i,
                    forecast,
                });
            }
        }

        if options.snapshot_at == Some(t) {
            let (bank, ctx) = method.engine_state().ok_or_else(|| {
                Error::config("snapshots are only supported for the engine method")
            })?;
            snapshot_out = Some(EngineSnapshot::new(
                panel.entity_ids().to_vec(),
                bank.clone(),
                ctx.clone(),
                Some(ResumePosition {
                    next_index: i + 1,
                    last_timestamp: t,
                }),
            ));
        }
    }

    if options.snapshot_at.is_some() && snapshot_out.is_none() {
        return Err(Error::config(
            "snapshot timestamp not found among the panel's learned observations",
        ));
    }

    let report = build_report(
        method.name(),
        panel.entity_ids(),
        horizon,
        &samples,
        emitted,
        cfg.total_mode,
    );
    let warning = if emitted == 0 {
        Some(
            "no forecasts emitted: panel does not extend past warm-up plus one horizon".to_string(),
        )
    } else {
        None
    };
    Ok(BacktestRun {
        method: method.name().to_string(),
        report,
        emissions,
        snapshot: snapshot_out,
        warning,
    })
}
