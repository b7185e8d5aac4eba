//! Annual maximum discharge series.

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("annual maximum series must not be empty")]
    Empty,
    #[error("discharge for year {year} is {value} but must be finite and > 0")]
    NonPositiveDischarge { year: i32, value: f64 },
}

/// One annual maximum discharge per year over a gap-free span of years.
///
/// Gaps and duplicate years are an ingestion concern; by the time a series
/// reaches this type it is a plain contiguous run starting at `start_year`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualMaxSeries {
    start_year: i32,
    values: Vec<f64>,
}

impl AnnualMaxSeries {
    /// Build a series from contiguous yearly values; discharges must be
    /// finite and strictly positive (the trend statistics take logs).
    pub fn new(start_year: i32, values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(SeriesError::NonPositiveDischarge {
                    year: start_year + i as i32,
                    value: v,
                });
            }
        }
        Ok(Self { start_year, values })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len() as i32).map(move |i| self.start_year + i)
    }

    pub fn value_for(&self, year: i32) -> Option<f64> {
        if year < self.start_year || year > self.end_year() {
            None
        } else {
            Some(self.values[(year - self.start_year) as usize])
        }
    }

    /// Restrict to years in `[from, to]`; `None` when the overlap is empty.
    pub fn window(&self, from: i32, to: i32) -> Option<Self> {
        let lo = from.max(self.start_year);
        let hi = to.min(self.end_year());
        if lo > hi {
            return None;
        }
        let a = (lo - self.start_year) as usize;
        let b = (hi - self.start_year) as usize;
        Some(Self {
            start_year: lo,
            values: self.values[a..=b].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_nonpositive() {
        let err = AnnualMaxSeries::new(1961, vec![10.0, 0.0, 5.0]).unwrap_err();
        assert_eq!(
            err,
            SeriesError::NonPositiveDischarge {
                year: 1962,
                value: 0.0
            }
        );
    }

    #[test]
    fn window_clips_to_overlap() {
        let s = AnnualMaxSeries::new(1960, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = s.window(1961, 1970).unwrap();
        assert_eq!(w.start_year(), 1961);
        assert_eq!(w.values(), &[2.0, 3.0, 4.0]);
        assert!(s.window(1970, 1980).is_none());
    }
}
