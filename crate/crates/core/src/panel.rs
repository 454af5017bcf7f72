//! Aligned multi-entity time series of loads and temperatures.

use chrono::{DateTime, Duration, FixedOffset};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Hourly panel of K entities over T timestamps: loads, temperatures (°F),
/// and per-timestamp holiday flags. Construction validates alignment, so a
/// panel in hand is safe to index without further checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityPanel {
    entity_ids: Vec<String>,
    timestamps: Vec<DateTime<FixedOffset>>,
    loads: DMatrix<f64>,        // T x K
    temperatures: DMatrix<f64>, // T x K
    holiday_flags: Vec<bool>,
}

impl EntityPanel {
    pub fn new(
        entity_ids: Vec<String>,
        timestamps: Vec<DateTime<FixedOffset>>,
        loads: DMatrix<f64>,
        temperatures: DMatrix<f64>,
        holiday_flags: Vec<bool>,
    ) -> Result<Self> {
        let k = entity_ids.len();
        let t = timestamps.len();
        if k == 0 {
            return Err(Error::data("panel needs at least one entity"));
        }
        if t == 0 {
            return Err(Error::data("panel needs at least one timestamp"));
        }
        if loads.nrows() != t || loads.ncols() != k {
            return Err(Error::data(format!(
                "loads matrix is {}x{}, expected {}x{}",
                loads.nrows(),
                loads.ncols(),
                t,
                k
            )));
        }
        if temperatures.nrows() != t || temperatures.ncols() != k {
            return Err(Error::data(format!(
                "temperatures matrix is {}x{}, expected {}x{}",
                temperatures.nrows(),
                temperatures.ncols(),
                t,
                k
            )));
        }
        if holiday_flags.len() != t {
            return Err(Error::data("holiday flags must cover every timestamp"));
        }
        {
            let mut ids = entity_ids.clone();
            ids.sort();
            ids.dedup();
            if ids.len() != k {
                return Err(Error::data("duplicate entity ids in panel"));
            }
        }
        let offset = timestamps[0].offset().local_minus_utc();
        for (i, ts) in timestamps.iter().enumerate() {
            if ts.offset().local_minus_utc() != offset {
                return Err(Error::data(format!(
                    "mixed UTC offsets: {} differs from {}",
                    ts, timestamps[0]
                )));
            }
            if i > 0 {
                let step = *ts - timestamps[i - 1];
                if step != Duration::hours(1) {
                    return Err(Error::data(format!(
                        "timestamps must advance in exact 1-hour steps; {} -> {}",
                        timestamps[i - 1],
                        ts
                    )));
                }
            }
        }
        if !crate::linalg::all_finite_mat(&loads) {
            return Err(Error::data("non-finite load value in panel"));
        }
        if !crate::linalg::all_finite_mat(&temperatures) {
            return Err(Error::data("non-finite temperature value in panel"));
        }
        Ok(EntityPanel {
            entity_ids,
            timestamps,
            loads,
            temperatures,
            holiday_flags,
        })
    }

    /// Number of entities K.
    pub fn entity_count(&self) -> usize {
        self.entity_ids.len()
    }

    /// Number of timestamps T.
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn entity_ids(&self) -> &[String] {
        &self.entity_ids
    }

    pub fn timestamps(&self) -> &[DateTime<FixedOffset>] {
        &self.timestamps
    }

    pub fn loads(&self) -> &DMatrix<f64> {
        &self.loads
    }

    pub fn temperatures(&self) -> &DMatrix<f64> {
        &self.temperatures
    }

    pub fn holiday_flags(&self) -> &[bool] {
        &self.holiday_flags
    }

    pub fn load_row(&self, index: usize) -> DVector<f64> {
        self.loads.row(index).transpose()
    }

    pub fn temperature_row(&self, index: usize) -> DVector<f64> {
        self.temperatures.row(index).transpose()
    }

    /// Temperatures for timestamps `start..start+len` as an `len x K` matrix.
    pub fn temperature_window(&self, start: usize, len: usize) -> DMatrix<f64> {
        self.temperatures.rows(start, len).into_owned()
    }
}
