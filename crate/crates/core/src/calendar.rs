//! Calendar typing: classification of timestamps into the discrete types
//! that select which parameter set is updated and used.

use chrono::{DateTime, Datelike, FixedOffset, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named rule mapping every timestamp to a calendar type in `{1..C}`.
///
/// Schemes are selected by id at runtime (config/CLI). The default scheme
/// distinguishes the 24 hours of weekdays from the 24 hours of weekends and
/// holidays, giving C = 48.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalendarScheme {
    /// Hours 0..23 of weekdays map to 1..24; weekend or holiday hours map to 25..48.
    #[serde(rename = "weekday-weekend-48")]
    WeekdayWeekend48,
    /// Two types: weekday (1) versus weekend-or-holiday (2), ignoring the hour.
    #[serde(rename = "weekday-weekend-2")]
    WeekdayWeekend2,
    /// A single type for every timestamp.
    #[serde(rename = "single-1")]
    Single,
}

impl CalendarScheme {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "weekday-weekend-48" => Ok(CalendarScheme::WeekdayWeekend48),
            "weekday-weekend-2" => Ok(CalendarScheme::WeekdayWeekend2),
            "single-1" => Ok(CalendarScheme::Single),
            other => Err(Error::config(format!(
                "unknown calendar scheme '{}' (known: {})",
                other,
                Self::ids().join(", ")
            ))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            CalendarScheme::WeekdayWeekend48 => "weekday-weekend-48",
            CalendarScheme::WeekdayWeekend2 => "weekday-weekend-2",
            CalendarScheme::Single => "single-1",
        }
    }

    /// Registered scheme ids.
    pub fn ids() -> Vec<String> {
        vec![
            "weekday-weekend-48".to_string(),
            "weekday-weekend-2".to_string(),
            "single-1".to_string(),
        ]
    }

    /// Number of calendar types C produced by this scheme.
    pub fn type_count(&self) -> usize {
        match self {
            CalendarScheme::WeekdayWeekend48 => 48,
            CalendarScheme::WeekdayWeekend2 => 2,
            CalendarScheme::Single => 1,
        }
    }

    /// Classifies a timestamp into its calendar type in `{1..C}`.
    ///
    /// Total: every timestamp maps to exactly one type. The hour is the
    /// local clock hour of the (fixed-offset) timestamp.
    pub fn calendar_type(&self, t: DateTime<FixedOffset>, holiday: bool) -> usize {
        let offpeak = is_weekend(t) || holiday;
        match self {
            CalendarScheme::WeekdayWeekend48 => {
                let hour = t.hour() as usize;
                if offpeak {
                    hour + 25
                } else {
                    hour + 1
                }
            }
            CalendarScheme::WeekdayWeekend2 => {
                if offpeak {
                    2
                } else {
                    1
                }
            }
            CalendarScheme::Single => 1,
        }
    }
}

impl Default for CalendarScheme {
    fn default() -> Self {
        CalendarScheme::WeekdayWeekend48
    }
}

impl std::fmt::Display for CalendarScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

fn is_weekend(t: DateTime<FixedOffset>) -> bool {
    matches!(t.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Calendar type under the default 48-type scheme.
pub fn calendar_type(t: DateTime<FixedOffset>, holiday: bool) -> usize {
    CalendarScheme::WeekdayWeekend48.calendar_type(t, holiday)
}
