//! Calendar days as integer day counts.
//!
//! All interval arithmetic in the pipeline is integer-day arithmetic; the
//! only place calendar semantics matter is parsing and formatting ISO-8601
//! dates at file boundaries.

use chrono::{Datelike, NaiveDate};
use std::fmt;
use std::ops::{Add, Sub};

/// A calendar day, stored as days since 1970-01-01 (may be negative).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Day(pub i32);

/// Error for a string that is not a valid ISO-8601 calendar date.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid ISO-8601 date: {0:?}")]
pub struct DateParseError(pub String);

const UNIX_EPOCH_CE_DAYS: i32 = 719_163; // num_days_from_ce of 1970-01-01

impl Day {
    /// Parse an ISO-8601 `YYYY-MM-DD` date.
    pub fn parse_iso(s: &str) -> Result<Day, DateParseError> {
        let date = NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map_err(|_| DateParseError(s.to_string()))?;
        Ok(Day(date.num_days_from_ce() - UNIX_EPOCH_CE_DAYS))
    }

    /// Format as ISO-8601 `YYYY-MM-DD`.
    pub fn to_iso(self) -> String {
        let date = NaiveDate::from_num_days_from_ce_opt(self.0 + UNIX_EPOCH_CE_DAYS)
            .expect("day count within calendar range");
        date.format("%Y-%m-%d").to_string()
    }

    /// Whole days from `other` to `self` (positive when `self` is later).
    pub fn days_since(self, other: Day) -> i32 {
        self.0 - other.0
    }
}

impl Add<i32> for Day {
    type Output = Day;
    fn add(self, days: i32) -> Day {
        Day(self.0 + days)
    }
}

impl Sub<i32> for Day {
    type Output = Day;
    fn sub(self, days: i32) -> Day {
        Day(self.0 - days)
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}
