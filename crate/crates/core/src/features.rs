//! Feature maps shared by learning and prediction: the load-transition
//! features `[1, s_{t-1,1}, …, s_{t-1,K}]` and the per-entity observation
//! features `[1, α1, α2]` built from temperature shifts against a running
//! per-calendar-type temperature mean.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation features per entity (intercept + two shift indicators).
pub const OBS_FEATURES_PER_ENTITY: usize = 3;

/// Temperature-shift thresholds, in °F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum deviation from the running calendar-type mean to count as a shift.
    pub shift_f: f64,
    /// Temperatures above this are extreme enough to register a shift.
    pub hot_f: f64,
    /// Temperatures below this are extreme enough to register a shift.
    pub cold_f: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            shift_f: 20.0,
            hot_f: 80.0,
            cold_f: 20.0,
        }
    }
}

/// How the running temperature mean is maintained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum TempMeanRule {
    /// Arithmetic mean of all temperatures seen for the calendar type.
    Cumulative,
    /// Exponentially weighted mean with the given factor.
    Ewma { lambda: f64 },
}

impl Default for TempMeanRule {
    fn default() -> Self {
        TempMeanRule::Cumulative
    }
}

/// Running per-(calendar type, entity) temperature statistics backing the
/// observation features. Single-writer: owned and updated by the driver that
/// feeds observations in chronological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TempContext {
    means: DMatrix<f64>, // C x K, valid where counts > 0
    counts: DMatrix<u64>,
    thresholds: Thresholds,
    rule: TempMeanRule,
}

impl TempContext {
    pub fn new(type_count: usize, entity_count: usize, thresholds: Thresholds, rule: TempMeanRule) -> Self {
        TempContext {
            means: DMatrix::zeros(type_count, entity_count),
            counts: DMatrix::zeros(type_count, entity_count),
            thresholds,
            rule,
        }
    }

    pub fn type_count(&self) -> usize {
        self.means.nrows()
    }

    pub fn entity_count(&self) -> usize {
        self.means.ncols()
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    /// Running mean for `(c, entity)`, or `None` before the first observation.
    pub fn mean(&self, calendar_type: usize, entity: usize) -> Option<f64> {
        if self.counts[(calendar_type - 1, entity)] == 0 {
            None
        } else {
            Some(self.means[(calendar_type - 1, entity)])
        }
    }

    pub fn count(&self, calendar_type: usize, entity: usize) -> u64 {
        self.counts[(calendar_type - 1, entity)]
    }

    /// Folds one temperature vector into the running means of `calendar_type`.
    pub fn observe(&mut self, calendar_type: usize, temps: &DVector<f64>) -> Result<()> {
        if temps.len() != self.entity_count() {
            return Err(Error::data(format!(
                "temperature vector has {} entries, context expects {}",
                temps.len(),
                self.entity_count()
            )));
        }
        let row = calendar_type - 1;
        for k in 0..self.entity_count() {
            let w = temps[k];
            if !w.is_finite() {
                return Err(Error::data(format!(
                    "non-finite temperature for entity {} (calendar type {})",
                    k, calendar_type
                )));
            }
            let n = self.counts[(row, k)];
            self.means[(row, k)] = if n == 0 {
                w
            } else {
                match self.rule {
                    TempMeanRule::Cumulative => {
                        let mean = self.means[(row, k)];
                        mean + (w - mean) / (n as f64 + 1.0)
                    }
                    TempMeanRule::Ewma { lambda } => {
                        lambda * self.means[(row, k)] + (1.0 - lambda) * w
                    }
                }
            };
            self.counts[(row, k)] = n + 1;
        }
        Ok(())
    }
}

/// Load-transition feature vector `[1, prev_loads…]` of length K+1.
pub fn build_feature_s(prev_loads: &DVector<f64>) -> Result<DVector<f64>> {
    if !crate::linalg::all_finite_vec(prev_loads) {
        return Err(Error::data("non-finite previous load in feature construction"));
    }
    let mut u = DVector::zeros(prev_loads.len() + 1);
    u[0] = 1.0;
    u.rows_mut(1, prev_loads.len()).copy_from(prev_loads);
    Ok(u)
}

/// Observation feature vector: per entity the block `[1, α1, α2]`, where α1
/// flags a hot shift (temperature far above the running mean and extreme)
/// and α2 a cold shift (far below and extreme). Before the first observation
/// of a calendar type the block is `[1, 0, 0]`.
pub fn build_feature_r(
    temps: &DVector<f64>,
    ctx: &TempContext,
    calendar_type: usize,
) -> Result<DVector<f64>> {
    if temps.len() != ctx.entity_count() {
        return Err(Error::data(format!(
            "temperature vector has {} entries, context expects {}",
            temps.len(),
            ctx.entity_count()
        )));
    }
    let th = ctx.thresholds();
    let mut u = DVector::zeros(temps.len() * OBS_FEATURES_PER_ENTITY);
    for k in 0..temps.len() {
        let w = temps[k];
        if !w.is_finite() {
            return Err(Error::data(format!(
                "non-finite temperature for entity {} in feature construction",
                k
            )));
        }
        let base = k * OBS_FEATURES_PER_ENTITY;
        u[base] = 1.0;
        if let Some(mean) = ctx.mean(calendar_type, k) {
            let extreme = w > th.hot_f || w < th.cold_f;
            if extreme {
                if w - mean > th.shift_f {
                    u[base + 1] = 1.0;
                } else if w - mean < -th.shift_f {
                    u[base + 2] = 1.0;
                }
            }
        }
    }
    Ok(u)
}
