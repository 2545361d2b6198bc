//! Calendar periods for call-report observations.
//!
//! A period is either a whole year (`1893`) or a quarter (`1977Q2`). Annual
//! periods sit at year end, so `1893` and `1893Q4` share the same position on
//! the quarterly time line. Horizons and event times are measured in years.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Period {
    pub year: i32,
    /// `None` for annual data.
    pub quarter: Option<u8>,
}

impl Period {
    pub fn annual(year: i32) -> Self {
        Period { year, quarter: None }
    }

    pub fn quarterly(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Validation(format!("quarter {quarter} out of range 1..4")));
        }
        Ok(Period { year, quarter: Some(quarter) })
    }

    /// Position on a quarterly time line; annual periods map to Q4.
    pub fn index(&self) -> i64 {
        i64::from(self.year) * 4 + i64::from(self.quarter.unwrap_or(4)) - 1
    }

    /// Fractional years between `self` and `other` (`self - other`).
    pub fn years_since(&self, other: &Period) -> f64 {
        (self.index() - other.index()) as f64 / 4.0
    }

    /// The same point in the calendar `years` earlier, keeping the frequency.
    pub fn shifted_years(&self, years: i32) -> Period {
        Period { year: self.year + years, quarter: self.quarter }
    }

    /// Last calendar day covered by the period.
    pub fn end_date(&self) -> NaiveDate {
        let (m, d) = match self.quarter.unwrap_or(4) {
            1 => (3, 31),
            2 => (6, 30),
            3 => (9, 30),
            _ => (12, 31),
        };
        NaiveDate::from_ymd_opt(self.year, m, d).expect("quarter end is a valid date")
    }

    pub fn is_year_end(&self) -> bool {
        self.quarter.is_none_or(|q| q == 4)
    }
}

impl PartialOrd for Period {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Period {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.index()
            .cmp(&other.index())
            .then(self.quarter.is_some().cmp(&other.quarter.is_some()))
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.quarter {
            None => write!(f, "{}", self.year),
            Some(q) => write!(f, "{}Q{}", self.year, q),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Validation(format!("unparseable period {s:?}"));
        if let Some((y, q)) = s.split_once(['Q', 'q']) {
            let year = y.parse().map_err(|_| bad())?;
            let quarter = q.parse().map_err(|_| bad())?;
            return Period::quarterly(year, quarter);
        }
        s.parse().map(Period::annual).map_err(|_| bad())
    }
}

/// Parse a charter-style date: either `YYYY` (taken as January 1) or `YYYY-MM-DD`.
pub fn parse_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    s.parse::<i32>()
        .ok()
        .and_then(|y| NaiveDate::from_ymd_opt(y, 1, 1))
        .ok_or_else(|| Error::Validation(format!("unparseable date {s:?}")))
}

/// Whole years elapsed from `from` to `to` (negative when `to` precedes `from`).
pub fn whole_years_between(from: NaiveDate, to: NaiveDate) -> i32 {
    let mut years = to.year() - from.year();
    if (to.month(), to.day()) < (from.month(), from.day()) {
        years -= 1;
    }
    years
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annual_and_q4_share_index() {
        let a: Period = "1893".parse().unwrap();
        let q: Period = "1893Q4".parse().unwrap();
        assert_eq!(a.index(), q.index());
        assert_eq!(a.to_string(), "1893");
        assert_eq!(q.to_string(), "1893Q4");
    }

    #[test]
    fn years_since_is_fractional_for_quarters() {
        let a: Period = "1990Q1".parse().unwrap();
        let b: Period = "1991Q3".parse().unwrap();
        assert_eq!(b.years_since(&a), 1.5);
    }

    #[test]
    fn bad_quarter_rejected() {
        assert!("1990Q5".parse::<Period>().is_err());
        assert!("abc".parse::<Period>().is_err());
    }

    #[test]
    fn age_in_whole_years() {
        let charter = parse_date("1890").unwrap();
        assert_eq!(whole_years_between(charter, Period::annual(1891).end_date()), 1);
        assert_eq!(whole_years_between(charter, Period::annual(1893).end_date()), 3);
        let mid = parse_date("1890-07-01").unwrap();
        assert_eq!(whole_years_between(mid, "1893Q1".parse::<Period>().unwrap().end_date()), 2);
    }
}
