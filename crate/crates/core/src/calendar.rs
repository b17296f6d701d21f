//! Month and day labels for monthly and daily series.

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(alloc::format!("month {month} out of range")));
        }
        Ok(Month { year, month })
    }

    /// Parse `YYYY-MM`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(alloc::format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Month::new(year, month)
    }

    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_index(i: i64) -> Self {
        Month { year: i.div_euclid(12) as i32, month: (i.rem_euclid(12) + 1) as u32 }
    }

    pub fn offset(self, months: i64) -> Self {
        Month::from_index(self.index() + months)
    }

    /// Quarter number 1..=4.
    pub fn quarter(self) -> u32 {
        (self.month - 1) / 3 + 1
    }

    pub fn days_in_month(self) -> u32 {
        match self.month {
            4 | 6 | 9 | 11 => 30,
            2 if is_leap(self.year) => 29,
            2 => 28,
            _ => 31,
        }
    }

    pub fn label(self) -> String {
        alloc::format!("{self}")
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

fn is_leap(y: i32) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Day {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

impl Day {
    /// Parse `YYYY-MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(alloc::format!("expected YYYY-MM-DD, got {s:?}"));
        let mut parts = s.trim().split('-');
        let year: i32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let day: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let m = Month::new(year, month)?;
        if day == 0 || day > m.days_in_month() {
            return Err(bad());
        }
        Ok(Day { year, month, day })
    }

    pub fn month(self) -> Month {
        Month { year: self.year, month: self.month }
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_arithmetic() {
        let m = Month::parse("2003-01").unwrap();
        assert_eq!(m.offset(251).label(), "2023-12");
        assert_eq!(m.offset(-1).label(), "2002-12");
        assert_eq!(Month::parse("2020-11").unwrap().quarter(), 4);
        assert!(Month::parse("2020-13").is_err());
        assert_eq!(Day::parse("2008-10-08").unwrap().month().label(), "2008-10");
        assert!(Day::parse("2021-02-29").is_err());
    }
}
