//! Versioned engine-state snapshots.
//!
//! A snapshot captures the full estimator state (model bank plus temperature
//! context) and, when taken mid-backtest, the resume position. The format is
//! JSON with a magic header pair (`format`, `version`); floats round-trip
//! exactly, so a resumed run reproduces the uninterrupted run bit for bit.

use std::fs;
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TempContext;
use crate::learner::ModelBank;

pub const SNAPSHOT_FORMAT: &str = "loadcast-model-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Where a mid-backtest snapshot stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumePosition {
    /// Panel index of the next observation to learn.
    pub next_index: usize,
    /// Timestamp of the last observation folded into the state.
    pub last_timestamp: DateTime<FixedOffset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub format: String,
    pub version: u32,
    pub entity_ids: Vec<String>,
    pub bank: ModelBank,
    pub ctx: TempContext,
    pub position: Option<ResumePosition>,
}

impl EngineSnapshot {
    pub fn new(
        entity_ids: Vec<String>,
        bank: ModelBank,
        ctx: TempContext,
        position: Option<ResumePosition>,
    ) -> Self {
        EngineSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            entity_ids,
            bank,
            ctx,
            position,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != SNAPSHOT_FORMAT {
            return Err(Error::Serialization(format!(
                "not a model snapshot (format '{}')",
                self.format
            )));
        }
        if self.version != SNAPSHOT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported snapshot version {} (expected {})",
                self.version, SNAPSHOT_VERSION
            )));
        }
        if self.entity_ids.len() != self.bank.entity_count() {
            return Err(Error::Serialization(
                "snapshot entity ids disagree with the model bank".to_string(),
            ));
        }
        Ok(())
    }
}

pub fn write_snapshot(path: &Path, snapshot: &EngineSnapshot) -> Result<()> {
    let body = serde_json::to_string(snapshot)
        .map_err(|e| Error::Serialization(format!("snapshot encode failed: {}", e)))?;
    fs::write(path, body)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<EngineSnapshot> {
    let body = fs::read_to_string(path)?;
    let snapshot: EngineSnapshot = serde_json::from_str(&body)
        .map_err(|e| Error::Serialization(format!("snapshot decode failed: {}", e)))?;
    snapshot.validate()?;
    Ok(snapshot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::CalendarScheme;
    use crate::features::{TempMeanRule, Thresholds};
    use nalgebra::DVector;

    fn tiny_state() -> (ModelBank, TempContext) {
        let scheme = CalendarScheme::Single;
        let mut bank = ModelBank::new(scheme, 2, 0.8, 0.7).unwrap();
        let mut ctx = TempContext::new(1, 2, Thresholds::default(), TempMeanRule::Cumulative);
        let t = crate::sim::default_start();
        for i in 0..5 {
            let prev = DVector::from_vec(vec![1.0 + 0.1 * i as f64, 2.0]);
            let now = DVector::from_vec(vec![1.05 + 0.1 * i as f64, 2.1]);
            let temps = DVector::from_vec(vec![40.0 + i as f64 * 7.3, 85.0]);
            bank.learn_step(&mut ctx, t + chrono::Duration::hours(i), false, &prev, &now, &temps)
                .unwrap();
        }
        (bank, ctx)
    }

    #[test]
    fn snapshot_round_trips_exactly() {
        let (bank, ctx) = tiny_state();
        let snap = EngineSnapshot::new(
            vec!["e01".into(), "e02".into()],
            bank,
            ctx,
            Some(ResumePosition {
                next_index: 5,
                last_timestamp: crate::sim::default_start() + chrono::Duration::hours(4),
            }),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        write_snapshot(&path, &snap).unwrap();
        let back = read_snapshot(&path).unwrap();
        // Exact float round-trip: the full state must compare equal.
        assert_eq!(snap, back);
    }

    #[test]
    fn foreign_json_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("other.json");
        std::fs::write(&path, "{\"format\": \"something-else\"}").unwrap();
        assert!(read_snapshot(&path).is_err());
    }
}
